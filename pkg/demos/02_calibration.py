"""Turn one expert's comparisons into a calibrated level-of-knowledge scale.

The reference scores come from a machine estimate (or 0.5 when there is
none). The LP moves them as little as possible, in total absolute
deviation, while forcing every strict comparison apart by the threshold t
and every equality together.
"""

from riskkit import CalibrationProblem, InfeasibleComparisonChain, calibrate

IDS = ("char-a", "char-b", "char-c", "char-d")
REFERENCE = {"char-a": 0.62, "char-b": 0.60, "char-c": 0.55, "char-d": 0.31}


def main():
    print("Reference estimates (what the history-trained model believes):")
    for cid in IDS:
        print("  %-8s %.2f" % (cid, REFERENCE[cid]))

    # the expert disagrees with the model's ordering of a and b
    problem = CalibrationProblem(
        ids=IDS,
        reference=REFERENCE,
        gt=frozenset({("char-b", "char-a"), ("char-a", "char-c")}),
        eq=frozenset({frozenset(("char-c", "char-d"))}),
        t=0.05,
    )
    scale = calibrate(problem)

    print()
    print("Calibrated scale (b above a by >= t, c and d pinned together):")
    for cid in IDS:
        print("  %-8s %.4f   (moved %+.4f)" % (
            cid, scale.scores[cid], scale.scores[cid] - REFERENCE[cid],
        ))
    print("  total movement: %.4f" % scale.objective)

    print()
    print("Comparisons can also be unsatisfiable outright. A strict chain")
    print("longer than 1/t cannot fit inside [0, 1]:")
    ids = tuple("link-%02d" % k for k in range(12))
    overlong = CalibrationProblem(
        ids=ids,
        reference={i: 0.5 for i in ids},
        gt=frozenset((ids[k], ids[k + 1]) for k in range(11)),
        eq=frozenset(),
        t=0.1,
    )
    try:
        calibrate(overlong)
    except InfeasibleComparisonChain as caught:
        print("  %s" % caught)
        print("  chain, most knowable first: %s" % " > ".join(caught.chain))


if __name__ == "__main__":
    main()
