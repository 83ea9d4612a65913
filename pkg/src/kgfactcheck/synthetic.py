"""A small seeded toy world for end-to-end runs.

People form households (spouses plus children), live and die in cities,
study and work at universities.  The generated KG is the world with some
facts hidden; hidden facts reappear in a web-oracle fixture with
probabilities above 0.5, alongside decoy false facts below 0.5.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .evidence import FileStubProvider, OracleResponse
from .triple_store import Term, Triple, TripleStore

TOY_RULES = """\
# spouse
0.9: spouse(a,b) <- child(a,c), child(b,c).
0.8: spouse(a,b) <- livesWith(a,b).
0.85: negspouse(a,b) <- sibling(a,b).
0.6: negspouse(a,b) <- colleague(a,b).
# deathPlace
0.85: deathPlace(a,b) <- lastResidence(a,b).
0.75: deathPlace(a,b) <- spouse(a,c), deathPlace(c,b).
0.8: negdeathPlace(a,b) <- birthPlace(a,b), lastResidence(a,c), c != b.
# almaMater
0.85: almaMater(a,b) <- advisor(a,c), employer(c,b).
0.8: almaMater(a,b) <- graduatedFrom(a,b).
0.6: negalmaMater(a,b) <- employer(a,b).
0.8: negalmaMater(a,b) <- studiedIn(a,c), locatedIn(b,d), c != d.
"""

TARGETS = ("spouse", "deathPlace", "almaMater")


@dataclass
class ToyWorld:
    kg: TripleStore
    oracle: FileStubProvider
    oracle_rows: list
    hidden: list

    def oracle_tsv(self) -> str:
        return "".join(f"{r.triple.subject}\t{r.triple.predicate}\t{r.triple.object}"
                       f"\t{r.probability:.2f}\n" for r in self.oracle_rows)


def _e(name: str) -> Term:
    return Term.entity(name)


def make_world(seed: int = 7, households: int = 60, hide: float = 0.35) -> ToyWorld:
    """Generate the toy world.  Roughly 1k KG triples at the default size."""
    rng = random.Random(seed)
    cities = [_e(f"City_{i:02d}") for i in range(12)]
    unis = [_e(f"Univ_{i:02d}") for i in range(8)]
    uni_city = {u: rng.choice(cities) for u in unis}
    facts: list[Triple] = []
    hideable: list[Triple] = []

    def add(s, p, o, can_hide=False):
        t = Triple(s, p, o)
        facts.append(t)
        if can_hide:
            hideable.append(t)

    for u in unis:
        add(u, "locatedIn", uni_city[u])

    people = []
    faculty = []
    for h in range(households):
        a, b = _e(f"P{h:03d}a"), _e(f"P{h:03d}b")
        people += [a, b]
        add(a, "spouse", b)
        add(b, "spouse", a)
        home = rng.choice(cities)
        if rng.random() < 0.5:
            add(a, "livesWith", b, True)
            add(b, "livesWith", a, True)
        for k in range(rng.randint(1, 2)):
            c = _e(f"P{h:03d}c{k}")
            people.append(c)
            add(a, "child", c, True)
            add(b, "child", c, True)
            if k == 1:
                add(_e(f"P{h:03d}c0"), "sibling", c)
                add(c, "sibling", _e(f"P{h:03d}c0"))
        if rng.random() < 0.15:
            add(a, "colleague", b)
            add(b, "colleague", a)
        for person in (a, b):
            if rng.random() < 0.6:
                add(person, "lastResidence", home, True)
                add(person, "deathPlace", home)
                born = home if rng.random() < 0.2 else rng.choice(cities)
                add(person, "birthPlace", born)
            if rng.random() < 0.25:
                faculty.append(person)
    for f in faculty:
        add(f, "employer", rng.choice(unis), True)
    employers = {t.subject: t.object for t in facts if t.predicate == "employer"}
    students = [p for p in people if p not in employers]
    rng.shuffle(students)
    for s in students[: len(students) // 2]:
        if faculty and rng.random() < 0.6:
            adv = rng.choice(faculty)
            u = employers[adv]
            add(s, "advisor", adv, True)
        else:
            u = rng.choice(unis)
            add(s, "graduatedFrom", u, True)
        add(s, "almaMater", u)
        add(s, "studiedIn", uni_city[u], True)
        if rng.random() < 0.1:
            add(s, "employer", u)
    for _ in range(households // 2):
        x, y = rng.sample(people, 2)
        add(x, "colleague", y)

    hidden = [t for t in sorted(set(hideable)) if rng.random() < hide]
    hidden_set = set(hidden)
    kg = TripleStore(t for t in facts if t not in hidden_set)
    rows = [OracleResponse(t, round(rng.uniform(0.6, 0.95), 2)) for t in hidden]
    world = set(facts)
    decoys = set()
    preds = ("child", "lastResidence", "employer", "livesWith")
    while len(decoys) < len(hidden) // 2:
        p = rng.choice(preds)
        s = rng.choice(people)
        o = rng.choice(cities if p == "lastResidence" else unis if p == "employer" else people)
        t = Triple(s, p, o)
        if t not in world and s != o:
            decoys.add(t)
    rows += [OracleResponse(t, round(rng.uniform(0.05, 0.5), 2)) for t in sorted(decoys)]
    rows.sort(key=lambda r: r.triple)
    oracle = FileStubProvider({r.triple: r for r in rows})
    return ToyWorld(kg, oracle, rows, hidden)


def make_large_kg(n_triples: int = 10_000, seed: int = 0, n_entities: int = 2_000,
                  predicates: tuple = ("spouse", "child", "deathPlace", "birthPlace",
                                       "almaMater", "employer", "colleague")) -> TripleStore:
    """Random multi-predicate graph of exactly ``n_triples`` distinct triples."""
    rng = random.Random(seed)
    ents = [_e(f"E{i:05d}") for i in range(n_entities)]
    store = TripleStore()
    while len(store) < n_triples:
        s, o = rng.sample(ents, 2)
        store.add(Triple(s, rng.choice(predicates), o))
    return store
