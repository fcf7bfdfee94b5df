"""Slow reference computations that share nothing with the engines beyond
the raw recursion."""
import itertools

from src.models.recursion import GroupWord, act_word, section_word
from src.parser.dsl import SourceDoc, parse


def acts_trivially_up_to(sys, w: GroupWord, n: int) -> bool:
    for length in range(1, n + 1):
        for v in itertools.product(range(sys.degree), repeat=length):
            if act_word(sys, w, v) != v:
                return False
    return True


def cyclic_normal_form(w: GroupWord, orders) -> tuple:
    """Free product of cyclic groups: merge neighbouring syllables mod the order"""
    stack = []
    for g, e in w:
        e %= orders[g]
        if stack and stack[-1][0] == g:
            e = (stack.pop()[1] + e) % orders[g]
        if e:
            stack.append((g, e))
    return tuple(stack)


def deep_sections(sys, orders, radius: int, depth: int) -> set:
    """Normal forms of g|_v for every word g of length <= radius and |v| = depth"""
    letters = [GroupWord.generator(i, s) for i in range(len(sys.generators)) for s in (1, -1)]
    found = set()
    for length in range(radius + 1):
        for combo in itertools.product(letters, repeat=length):
            g = GroupWord.empty()
            for letter in combo:
                g = g * letter
            for v in itertools.product(range(sys.degree), repeat=depth):
                found.add(cyclic_normal_form(section_word(sys, g, v), orders))
    return found


def nucleus_as_system(sys, nucleus):
    """The non-trivial nucleus elements written out as generators of a new recursion"""
    letters = sys.alphabet.letters
    elements = nucleus.non_trivial()
    names = {e.key: f"g{i:02d}" for i, e in enumerate(elements)}
    lines = ["alphabet: " + " ".join(letters)]
    for e in elements:
        cycles = "".join("(" + " ".join(letters[x] for x in c) + ")" for c in nucleus.perm[e.key].cycles())
        sections = ", ".join(names.get(k, "1") for k in nucleus.sect[e.key])
        lines.append(f"{names[e.key]} = {cycles}({sections})")
    return parse(SourceDoc("\n".join(lines) + "\n"))
