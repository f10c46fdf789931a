"""Probability-of-success entry under the confidence-likelihood region.

The region encodes one rule: the less you know, the closer to 0.5 your
probability must stay; high confidence in either direction has to be earned
with knowledge. Peer review takes the experts' entries, computes the
median, and projects it back into the region at the consensus LOK.
"""

from riskkit import DEFAULT_REGION, PosEntry, allowed_intervals, consensus_pos, validate_pos


def band(lok):
    parts = ["%.3f..%.3f" % (lo, hi) for lo, hi in allowed_intervals(DEFAULT_REGION, lok)]
    return "  u  ".join(parts)


def main():
    print("Allowed POS bands widen away from 0.5 as LOK grows:")
    for lok in (0.0, 0.3, 0.5, 0.7, 0.9, 1.0):
        print("  lok %.1f: %s" % (lok, band(lok)))

    print()
    print("A bold claim needs knowledge behind it:")
    for lok in (0.2, 0.6, 1.0):
        verdict = validate_pos(DEFAULT_REGION, lok, 0.95)
        print("  pos 0.95 at lok %.1f: %s (nearest allowed %.3f)"
              % (lok, "ok" if verdict.accepted else "rejected", verdict.nearest))

    print()
    print("Peer review of three entries for one characterization:")
    entries = [
        PosEntry("alice", "char-b", pos=0.12, lok_used=0.9, scale_kind="expert"),
        PosEntry("bob", "char-b", pos=0.20, lok_used=0.8, scale_kind="expert"),
        PosEntry("carol", "char-b", pos=0.25, lok_used=0.75, scale_kind="expert"),
    ]
    for e in entries:
        print("  %-6s says %.2f (at their lok %.2f)" % (e.expert_id, e.pos, e.lok_used))
    global_lok = 0.85
    final = consensus_pos(entries, DEFAULT_REGION, global_lok)
    print("  median projected into the region at global lok %.2f: %.4f"
          % (global_lok, final))


if __name__ == "__main__":
    main()
