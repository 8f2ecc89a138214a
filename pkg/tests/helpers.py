"""Test-only oracles, kept independent of the library's Dehn machinery."""

from smallcancel.words import cyclic_class, free_reduce


def naive_rewrites(word, relators, max_len):
    """All freely reduced words obtained by inserting one relator
    (any rotation, either orientation) at one position, length-capped."""
    rels = set()
    for r in relators:
        rels |= cyclic_class(r)
    out = set()
    w = tuple(word)
    for r in rels:
        for i in range(len(w) + 1):
            nw = free_reduce(w[:i] + r + w[i:])
            if len(nw) <= max_len:
                out.add(nw)
    return out


def naive_closure(word, relators, max_len, depth):
    """Closure of {word} under <= depth relator insertions (length-capped)."""
    seen = {free_reduce(tuple(word))}
    frontier = set(seen)
    for _ in range(depth):
        new = set()
        for w in frontier:
            new |= naive_rewrites(w, relators, max_len) - seen
        seen |= new
        frontier = new
        if not frontier:
            break
    return seen


def naive_is_trivial(word, relators, max_len, depth):
    """Exhaustive relator-insertion search: can the word be carried to the
    empty word within the budget?  'False' means not found within bounds."""
    return () in naive_closure(word, relators, max_len, depth)


def naive_equal(w1, w2, relators, max_len, depth):
    c1 = naive_closure(w1, relators, max_len, depth)
    if free_reduce(tuple(w2)) in c1:
        return True
    c2 = naive_closure(w2, relators, max_len, depth)
    return bool(c1 & c2)
