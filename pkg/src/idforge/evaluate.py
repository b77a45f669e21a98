"""Pairwise correctness metrics, clustering comparison, rater agreement,
and the synthetic error-injection corpus generator used across the tests.

Partitions are plain mappings ``member -> cluster label``. Metrics count
unordered member pairs: a true positive is a pair co-clustered in both
the predicted and the reference partition. Splitting is the fraction of
true pairs the resolver fails to link, lumping the fraction (relative to
true pairs) of links that join distinct entities.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

from .ingest import CommitRecord, IdentityTable


@dataclass(frozen=True)
class PairConfusion:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def _comb2(n: int) -> int:
    return n * (n - 1) // 2


def _groups(partition: Mapping[Hashable, Hashable]) -> dict[Hashable, list]:
    groups: dict[Hashable, list] = {}
    for member, label in partition.items():
        groups.setdefault(label, []).append(member)
    return groups


def pair_confusion(
    predicted: Mapping[Hashable, Hashable], golden: Mapping[Hashable, Hashable]
) -> PairConfusion:
    """Classify every unordered pair by co-membership in each partition.

    Computed from the contingency table rather than pair enumeration, so
    it scales; the tests pin it against a brute-force enumerator.
    """
    if set(predicted) != set(golden):
        raise ValueError("partitions cover different identity universes")
    n = len(predicted)
    pred_groups = _groups(predicted)
    gold_groups = _groups(golden)
    # joint counts: pairs sharing both a predicted and a golden cluster
    joint: dict[tuple, int] = {}
    for member, plabel in predicted.items():
        key = (plabel, golden[member])
        joint[key] = joint.get(key, 0) + 1
    tp = sum(_comb2(c) for c in joint.values())
    pred_pairs = sum(_comb2(len(g)) for g in pred_groups.values())
    gold_pairs = sum(_comb2(len(g)) for g in gold_groups.values())
    fp = pred_pairs - tp
    fn = gold_pairs - tp
    tn = _comb2(n) - tp - fp - fn
    return PairConfusion(tp=tp, fp=fp, fn=fn, tn=tn)


def precision_recall(c: PairConfusion) -> tuple[float | None, float | None]:
    """(tp/(tp+fp), tp/(tp+fn)); None marks an undefined (0/0) value."""
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp > 0 else None
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn > 0 else None
    return precision, recall


def splitting_lumping(c: PairConfusion) -> tuple[float, float]:
    """(fn/(tp+fn), fp/(tp+fn)): missed true pairs and wrong links, both
    relative to the number of true pairs."""
    denom = c.tp + c.fn
    if denom == 0:
        raise ValueError("no true pairs in the reference partition; splitting undefined")
    return c.fn / denom, c.fp / denom


@dataclass
class ComparisonReport:
    """Two-way clustering comparison in the shape of a method-vs-method table."""

    entities_a: int
    entities_b: int
    a_vs_b: dict[str, float | None]
    b_vs_a: dict[str, float | None]
    samples_a_splits: list[tuple]
    samples_a_lumps: list[tuple]

    def to_json(self) -> dict:
        return {
            "entities_a": self.entities_a,
            "entities_b": self.entities_b,
            "a_vs_b": self.a_vs_b,
            "b_vs_a": self.b_vs_a,
            "samples": {
                "a_splits": [list(p) for p in self.samples_a_splits],
                "a_lumps": [list(p) for p in self.samples_a_lumps],
            },
        }


def _direction_metrics(
    predicted: Mapping[Hashable, Hashable], reference: Mapping[Hashable, Hashable]
) -> dict[str, float | None]:
    c = pair_confusion(predicted, reference)
    precision, recall = precision_recall(c)
    try:
        splitting, lumping = splitting_lumping(c)
    except ValueError:
        splitting = lumping = None
    return {
        "precision": precision,
        "recall": recall,
        "splitting": splitting,
        "lumping": lumping,
    }


def _disagreement_samples(
    a: Mapping[Hashable, Hashable], b: Mapping[Hashable, Hashable], k: int
) -> tuple[list[tuple], list[tuple]]:
    # pairs co-clustered in b but not a (a splits them), and vice versa
    splits: list[tuple] = []
    lumps: list[tuple] = []
    for target, source, out in ((b, a, splits), (a, b, lumps)):
        for members in _groups(target).values():
            members = sorted(members)
            for i in range(len(members)):
                for j in range(i + 1, len(members)):
                    if source[members[i]] != source[members[j]]:
                        out.append((members[i], members[j]))
                        if len(out) >= k:
                            break
                if len(out) >= k:
                    break
            if len(out) >= k:
                break
    return splits, lumps


def compare_resolutions(
    part_a: Mapping[Hashable, Hashable],
    part_b: Mapping[Hashable, Hashable],
    universe: Iterable[Hashable] | None = None,
    sample_count: int = 10,
) -> ComparisonReport:
    """Symmetric comparison of two resolutions over the same author universe."""
    if universe is not None:
        universe = set(universe)
        if set(part_a) != universe or set(part_b) != universe:
            raise ValueError("both partitions must cover exactly the given universe")
    elif set(part_a) != set(part_b):
        raise ValueError("partitions cover different identity universes")
    splits, lumps = _disagreement_samples(part_a, part_b, sample_count)
    return ComparisonReport(
        entities_a=len(set(part_a.values())),
        entities_b=len(set(part_b.values())),
        a_vs_b=_direction_metrics(part_a, part_b),
        b_vs_a=_direction_metrics(part_b, part_a),
        samples_a_splits=splits,
        samples_a_lumps=lumps,
    )


def rater_agreement(labels: Iterable, rater_a: str, rater_b: str) -> dict:
    """Percent agreement between two raters after thresholding soft labels
    at 0.5. Latest judgment per (pair, rater) wins."""
    latest: dict[tuple, dict[str, object]] = {}
    for lp in labels:
        key = (lp.id1, lp.id2)
        latest.setdefault(key, {})[lp.rater] = lp
    agree = disagree = 0
    for judgments in latest.values():
        if rater_a in judgments and rater_b in judgments:
            if judgments[rater_a].label() == judgments[rater_b].label():
                agree += 1
            else:
                disagree += 1
    compared = agree + disagree
    return {
        "pairs_compared": compared,
        "agreements": agree,
        "disagreements": disagree,
        "pct_agreement": agree / compared if compared else None,
    }


# ---------------------------------------------------------------------------
# Synthetic corpus generation
# ---------------------------------------------------------------------------

_FIRST_NAMES = (
    "james", "mary", "robert", "patricia", "john", "jennifer", "michael", "linda",
    "david", "elizabeth", "william", "barbara", "richard", "susan", "joseph",
    "jessica", "thomas", "sarah", "charles", "karen", "christopher", "lisa",
    "daniel", "nancy", "matthew", "betty", "anthony", "margaret", "mark",
    "sandra", "donald", "ashley", "steven", "kimberly", "paul", "emily",
    "andrew", "donna", "joshua", "michelle", "kenneth", "carol", "kevin",
    "amanda", "brian", "dorothy", "george", "melissa", "edward", "deborah",
    "ronald", "stephanie", "timothy", "rebecca", "jason", "sharon", "jeffrey",
    "laura", "ryan", "cynthia", "jacob", "kathleen", "gary", "amy", "nicholas",
    "angela", "eric", "shirley", "jonathan", "anna", "stephen", "brenda",
    "larry", "pamela", "justin", "emma", "scott", "nicole", "brandon", "helen",
)

_LAST_NAMES = (
    "smith", "johnson", "williams", "brown", "jones", "garcia", "miller",
    "davis", "rodriguez", "martinez", "hernandez", "lopez", "gonzalez",
    "wilson", "anderson", "taylor", "moore", "jackson", "martin", "lee",
    "perez", "thompson", "white", "harris", "sanchez", "clark", "ramirez",
    "lewis", "robinson", "walker", "young", "allen", "king", "wright",
    "torres", "nguyen", "hill", "flores", "green", "adams", "nelson", "baker",
    "hall", "rivera", "campbell", "mitchell", "carter", "roberts", "gomez",
    "phillips", "evans", "turner", "diaz", "parker", "cruz", "edwards",
    "collins", "reyes", "stewart", "morris", "morales", "murphy", "cook",
    "rogers", "gutierrez", "ortiz", "morgan", "cooper", "peterson", "bailey",
    "reed", "kelly", "howard", "ramos", "kim", "cox", "ward", "richardson",
)

_DOMAINS = (
    "gmail.com", "yahoo.com", "hotmail.com", "outlook.com", "fastmail.fm",
    "stackcloud.io", "mirantix.com", "griddyn.com", "rackible.com",
    "intel-labs.example", "redhive.org", "canonical.example",
)

_ZONES = (
    "-0800", "-0700", "-0600", "-0500", "-0400", "-0300", "+0000", "+0100",
    "+0200", "+0300", "+0400", "+0530", "+0800", "+0900", "+1000", "+1100",
)

_SHARED_VOCAB = (
    "fix", "bug", "add", "test", "tests", "refactor", "update", "remove",
    "cleanup", "merge", "docs", "typo", "support", "implement", "handle",
    "error", "errors", "config", "option", "feature", "api", "build",
    "release", "version", "bump", "revert", "improve", "rename", "move",
    "use", "make", "avoid", "check", "validate", "issue", "patch", "minor",
    "initial", "wip", "review", "style", "lint", "format", "deps", "upgrade",
    "driver", "module", "service", "client", "server", "request", "response",
    "timeout", "retry", "cache", "queue", "log", "logging", "metrics",
)

_SYLLABLES = (
    "ba", "be", "bi", "bo", "bu", "da", "de", "di", "do", "du", "fa", "fe",
    "fi", "fo", "ga", "ge", "gi", "go", "ka", "ke", "ki", "ko", "la", "le",
    "li", "lo", "ma", "me", "mi", "mo", "na", "ne", "ni", "no", "pa", "pe",
    "pi", "po", "ra", "re", "ri", "ro", "sa", "se", "si", "so", "ta", "te",
    "ti", "to", "va", "ve", "vi", "vo", "za", "ze", "zi", "zo",
)

_TEAM_SIZE = 5
_EPOCH_BASE = 1_500_000_000
_EPOCH_SPAN = 94_608_000  # three years

ERROR_CLASSES = (
    "typo", "env_switch", "name_reorder", "org_alias", "template", "anonymous",
    "email_domain",
)


@dataclass(frozen=True)
class SyntheticCorpusSpec:
    """Developer count, per-error-class injection rates, and the seed."""

    developers: int = 100
    typo: float = 0.0
    env_switch: float = 0.0
    name_reorder: float = 0.0
    org_alias: float = 0.0
    template: float = 0.0
    anonymous: float = 0.0
    email_domain: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        for cls in ERROR_CLASSES:
            rate = getattr(self, cls)
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"rate {cls}={rate} outside [0, 1]")
        if self.developers < 1:
            raise ValueError("need at least one developer")


@dataclass
class SyntheticCorpus:
    """Commits plus the golden truth they were generated from.

    ``golden`` maps each non-homonym author string to its developer index.
    ``homonyms`` maps each shared (org-alias) author string to the sorted
    tuple of developer indices that committed under it; such strings cannot
    live in a partition of author strings and are excluded from pairwise
    metrics.
    """

    spec: SyntheticCorpusSpec
    commits: list[CommitRecord]
    golden: dict[str, int]
    homonyms: dict[str, tuple[int, ...]]

    def golden_id_partition(self, table: IdentityTable) -> dict[int, int]:
        """Golden partition over identity ids, homonym strings excluded."""
        out = {}
        for author, entity in self.golden.items():
            if author in table:
                out[table.by_author(author).id] = entity
        return out


def _word(rng: random.Random) -> str:
    return "".join(rng.choice(_SYLLABLES) for _ in range(rng.randint(2, 4)))


def _typo(rng: random.Random, s: str) -> str:
    if len(s) < 3:
        return s + rng.choice("abcdefghijklmnopqrstuvwxyz")
    for _ in range(rng.randint(1, 2)):
        kind = rng.choice(("sub", "del", "ins", "swap"))
        i = rng.randrange(len(s) - 1)
        if kind == "sub":
            s = s[:i] + rng.choice("abcdefghijklmnopqrstuvwxyz") + s[i + 1 :]
        elif kind == "del" and len(s) > 3:
            s = s[:i] + s[i + 1 :]
        elif kind == "ins":
            s = s[:i] + rng.choice("abcdefghijklmnopqrstuvwxyz") + s[i:]
        elif kind == "swap":
            s = s[:i] + s[i + 1] + s[i] + s[i + 2 :]
    return s


class _Developer:
    def __init__(
        self, idx: int, rng: random.Random, first: str, last: str,
        global_files: tuple[str, ...],
    ) -> None:
        self.idx = idx
        self.first = first
        self.last = last
        style = rng.choice(("{f}.{l}", "{f}{l}", "{fi}{l}", "{f}_{l}"))
        self.user = style.format(f=first, l=last, fi=first[0])
        self.domain = rng.choice(_DOMAINS)
        self.alt_domain = rng.choice([d for d in _DOMAINS if d != self.domain])
        self.email = f"{self.user}@{self.domain}"
        self.display = f"{first.capitalize()} {last.capitalize()}"
        self.base_author = f"{self.display} <{self.email}>"
        self.home_zone = rng.choice(_ZONES)
        self.alt_zone = rng.choice(_ZONES)
        self.vocab = tuple(_word(rng) for _ in range(12))
        team = idx // _TEAM_SIZE
        self.own_files = tuple(
            f"proj{team:03d}/{self.user.replace('.', '_')}_{j}.py" for j in range(8)
        )
        self.team_files = tuple(f"proj{team:03d}/core_{j}.py" for j in range(6))
        # cross-team work gives the collaboration graph hubs and degree
        # variance instead of disjoint uniform team cliques
        self.global_files = tuple(
            rng.sample(global_files, rng.randint(1, min(3, len(global_files))))
        )

    def alias(self, rng: random.Random, kind: str) -> str | None:
        if kind == "typo":
            if rng.random() < 0.6:
                return f"{_typo(rng, self.display)} <{self.email}>"
            return f"{self.display} <{_typo(rng, self.user)}@{self.domain}>"
        if kind == "env_switch":
            if rng.random() < 0.5:
                host = rng.choice(("laptop", "desktop", "devbox", "build"))
                return f"{self.first}{self.last} <{self.user}@{host}.local>"
            short = f"{self.first[0]}{self.last}"
            return f"{short} <{short}@{self.alt_domain}>"
        if kind == "name_reorder":
            return f"{self.last.capitalize()} {self.first.capitalize()} <{self.email}>"
        if kind == "email_domain":
            return f"{self.display} <{self.user}@{self.alt_domain}>"
        if kind == "template":
            return f"Your Name <{self.email}>"
        if kind == "anonymous":
            return f"{self.user} <unknown>"
        return None


def _make_commits(
    rng: random.Random, dev: _Developer, author: str, count: int
) -> list[CommitRecord]:
    commits = []
    for _ in range(count):
        n_files = rng.randint(1, 4)
        files = set()
        for _ in range(n_files):
            roll = rng.random()
            if roll < 0.60:
                pool = dev.own_files
            elif roll < 0.85:
                pool = dev.team_files
            else:
                pool = dev.global_files
            files.add(rng.choice(pool))
        roll = rng.random()
        if roll < 0.85:
            zone = dev.home_zone
        elif roll < 0.95:
            zone = dev.alt_zone
        else:
            zone = rng.choice(_ZONES)
        words = [
            rng.choice(dev.vocab) if rng.random() < 0.55 else rng.choice(_SHARED_VOCAB)
            for _ in range(rng.randint(4, 10))
        ]
        commits.append(
            CommitRecord(
                sha=f"{rng.getrandbits(160):040x}",
                author_string=author,
                timestamp=_EPOCH_BASE + rng.randrange(_EPOCH_SPAN),
                tz_offset=zone,
                files=frozenset(files),
                message=" ".join(words),
            )
        )
    return commits


def generate_synthetic_corpus(spec: SyntheticCorpusSpec) -> SyntheticCorpus:
    """Seed-deterministic commits with injected identity errors and the
    golden partition that generated them."""
    rng = random.Random(spec.seed)
    name_pairs = [(f, l) for f in _FIRST_NAMES for l in _LAST_NAMES]
    if spec.developers > len(name_pairs):
        raise ValueError(f"at most {len(name_pairs)} developers supported")
    chosen = rng.sample(name_pairs, spec.developers)
    n_global = max(4, spec.developers // 10)
    global_files = tuple(f"shared/common_{k:03d}.py" for k in range(n_global))
    devs = [_Developer(i, rng, f, l, global_files) for i, (f, l) in enumerate(chosen)]
    base_strings = {dev.base_author for dev in devs}

    golden: dict[str, int] = {}
    commits: list[CommitRecord] = []
    org_members: list[_Developer] = []

    for dev in devs:
        golden[dev.base_author] = dev.idx
        commits.extend(_make_commits(rng, dev, dev.base_author, rng.randint(8, 20)))
        for kind in ("typo", "env_switch", "name_reorder", "email_domain", "template", "anonymous"):
            if rng.random() < getattr(spec, kind):
                alias = dev.alias(rng, kind)
                # an alias may not shadow any base identity or earlier alias:
                # golden must stay a function from author string to developer
                if alias and alias not in golden and alias not in base_strings:
                    golden[alias] = dev.idx
                    commits.extend(_make_commits(rng, dev, alias, rng.randint(3, 8)))
        if rng.random() < spec.org_alias:
            org_members.append(dev)

    homonyms: dict[str, tuple[int, ...]] = {}
    if len(org_members) >= 2:
        group_styles = ("root <root@srv{g:02d}.example.com>", "jenkins <jenkins@ci{g:02d}.example.org>")
        for g in range(0, len(org_members) - 1, 2):
            group = org_members[g : g + 2]
            if g + 3 == len(org_members):
                group = org_members[g : g + 3]  # fold the leftover into the last group
            author = group_styles[(g // 2) % len(group_styles)].format(g=g // 2)
            homonyms[author] = tuple(sorted(d.idx for d in group))
            for dev in group:
                commits.extend(_make_commits(rng, dev, author, rng.randint(2, 5)))
            if g + 3 == len(org_members):
                break

    rng.shuffle(commits)
    return SyntheticCorpus(spec=spec, commits=commits, golden=golden, homonyms=homonyms)


def label_candidate_pairs(
    pairs: Sequence[tuple[int, int]], golden_ids: Mapping[int, int]
) -> tuple[list[tuple[int, int]], list[int]]:
    """Label candidate pairs by golden co-membership; pairs touching ids
    outside the golden universe (homonym strings) are dropped."""
    kept: list[tuple[int, int]] = []
    labels: list[int] = []
    for id1, id2 in pairs:
        e1 = golden_ids.get(id1)
        e2 = golden_ids.get(id2)
        if e1 is None or e2 is None:
            continue
        kept.append((id1, id2))
        labels.append(1 if e1 == e2 else 0)
    return kept, labels
