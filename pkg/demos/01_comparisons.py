"""Walk through pairwise comparison entry for one expert.

An expert never types numbers here. They only say "I know less about this
characterization than that one" (lt) or "about the same" (eq), and the
closure keeps their statements consistent: anything implied is derived,
anything contradictory is rejected with a witness chain showing why.
"""

from riskkit import ComparisonGraph, ContradictionError, eq, lt

CHARS = ("char-north", "char-south", "char-east", "char-west")


def show(graph):
    for relation in sorted(graph.closure(), key=lambda r: (r.kind, r.a, r.b)):
        marker = "asserted" if relation in graph.asserted else "implied"
        print("  %s %s %s  (%s)" % (relation.a, relation.kind, relation.b, marker))


def main():
    g = ComparisonGraph.empty(CHARS)

    print("The expert ranks what they know, one pair at a time.")
    g = g.add(lt("char-north", "char-south"))
    g = g.add(lt("char-south", "char-east"))
    g = g.add(eq("char-west", "char-north"))
    show(g)

    print()
    print("north < east was never typed; ask whether it is already implied:")
    before = g
    g = g.add(lt("char-north", "char-east"))
    print("  adding it changed the graph: %s" % (g is not before))

    print()
    print("Now the expert slips and tries east < west, closing a cycle:")
    try:
        g.add(lt("char-east", "char-west"))
    except ContradictionError as caught:
        print("  rejected: %s" % caught)
        print("  witness chain the UI would display:")
        for relation in caught.witness:
            print("    %s %s %s" % (relation.a, relation.kind, relation.b))

    print()
    print("The graph itself is untouched by the failed add:")
    show(g)


if __name__ == "__main__":
    main()
