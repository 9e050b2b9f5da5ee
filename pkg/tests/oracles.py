"""Independent reference implementations used as test oracles."""

import math
import unicodedata


def norm(text: str) -> str:
    return " ".join(unicodedata.normalize("NFC", unicodedata.normalize("NFC", text).lower()).split())


def reference_embedding(text: str, d: int = 256) -> list[float]:
    t = norm(text)
    v = [0.0] * d
    if len(t) < 3:
        v[0] = 1.0
        return v
    for i in range(len(t) - 2):
        h = 14695981039346656037
        for b in t[i : i + 3].encode():
            h = ((h ^ b) * 1099511628211) % 2**64
        v[h % d] += 1
    n = math.sqrt(sum(x * x for x in v))
    return [x / n for x in v]


def reference_cosine(a: str, b: str) -> float:
    u, v = reference_embedding(a), reference_embedding(b)
    return sum(x * y for x, y in zip(u, v))


def naive_quip(sentence: str, units: list[str], n: int) -> float:
    s = norm(sentence)
    grams = {s[i : i + n] for i in range(len(s) - n + 1)}
    if not grams:
        return 1.0
    normed = [norm(u) for u in units]
    return sum(any(g in u for u in normed) for g in grams) / len(grams)


def brute_macro(tp: int, fp: int, fn: int, tn: int) -> tuple[float, float, float, float]:
    """Expand counts to label lists and score each class separately."""
    gold = ["U"] * (tp + fn) + ["G"] * (fp + tn)
    pred = ["U"] * tp + ["G"] * fn + ["U"] * fp + ["G"] * tn
    ps, rs, fs = [], [], []
    for cls in ("U", "G"):
        hit = sum(1 for g, p in zip(gold, pred) if g == p == cls)
        npred = sum(1 for p in pred if p == cls)
        ngold = sum(1 for g in gold if g == cls)
        p = hit / npred if npred else 0.0
        r = hit / ngold if ngold else 0.0
        f = 2 * p * r / (p + r) if p + r else 0.0
        ps.append(p)
        rs.append(r)
        fs.append(f)
    acc = sum(1 for g, p in zip(gold, pred) if g == p) / len(gold)
    return sum(ps) / 2, sum(rs) / 2, sum(fs) / 2, acc


class MatrixJudge:
    """Judge returning preset contradiction values keyed by (premise, hypothesis)."""

    def __init__(self, table: dict[tuple[str, str], float]):
        self.table = table
        self.calls = 0

    def judge_pair(self, premise: str, hypothesis: str):
        from groundgate.providers import PairwiseJudgment

        self.calls += 1
        c = self.table[(premise, hypothesis)]
        return PairwiseJudgment(entail=1.0 - c, neutral=0.0, contradict=c, consistency=1.0 - c)


def sentence_texts(prefix: str, n: int) -> list[str]:
    words = ["Alpha", "Bravo", "Charlie", "Delta", "Echo", "Foxtrot", "Golf", "Hotel", "India", "Juliet"]
    return [f"{prefix} {words[i % 10]} item {i} stands." for i in range(n)]
