"""Merge three disagreeing experts into one consensus ordering.

Each expert's closure votes on every pair it relates. The solver finds the
weak ordering (ties allowed) that disagrees with the fewest votes, exactly;
the brute-force enumeration cross-checks it on this small instance.
"""

from riskkit import (
    ComparisonGraph,
    aggregate_weights,
    brute_force_consensus,
    eq,
    lt,
    solve_consensus,
)

IDS = ("char-a", "char-b", "char-c")


def expert(*relations):
    g = ComparisonGraph.empty(IDS)
    for r in relations:
        g = g.add(r)
    return g


def main():
    graphs = [
        expert(lt("char-a", "char-b"), lt("char-b", "char-c")),  # a < b < c
        expert(lt("char-a", "char-b"), eq("char-b", "char-c")),  # a < b = c
        expert(lt("char-b", "char-a")),                          # dissent: b < a
    ]

    weights = aggregate_weights(graphs, IDS)
    print("Vote tallies per pair (a-below, b-below, equal):")
    for pair, tally in sorted(weights.counts.items()):
        print("  %s vs %s: %s" % (pair[0], pair[1], tally))

    solved = solve_consensus(weights)
    print()
    print("Consensus levels (lower level = less knowable):")
    for cid in IDS:
        print("  %-8s level %d" % (cid, solved.level[cid]))
    print("  disagreement cost: %d vote(s) overruled" % solved.objective)
    print("  search effort: %d nodes in %.1f ms"
          % (solved.stats.nodes, solved.stats.runtime_ms))

    check = brute_force_consensus(weights)
    print()
    print("Brute force over all weak orderings agrees: %s"
          % (check.objective == solved.objective and check.level == solved.level))


if __name__ == "__main__":
    main()
