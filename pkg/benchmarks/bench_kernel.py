"""Compare the Cython and pure-Python matching kernels.

    python3 benchmarks/bench_kernel.py [--tokens 20000] [--repeat 3]

Runs the shipped NE+DE cascade over a synthetic transcription and times the
kernel call alone and the whole annotation run, for each available backend.
"""

from __future__ import annotations

import argparse
import random
import time
from array import array

from transcascade import _kernel
from transcascade.engine import AnnotatedDocument, run_cascade
from transcascade.packs import load_cascade
from transcascade.transcript import parse_transcription

PHRASES = [
    "moi je suis native de Pithiviers",
    "j'aime mieux Orléans",
    "nous sommes revenus parce que mon père était officier",
    "le concert de Johnny Hallyday",
    "Le musicien Willy DeVille",
    "euh on allait souvent à Paris le dimanche",
    "ça fait neuf ans",
    "et puis bon voilà quoi",
]


def synthetic_document(n_tokens: int, seed: int = 0) -> bytes:
    rng = random.Random(seed)
    turns, count, t = [], 0, 0.0
    while count < n_tokens:
        words = []
        for _ in range(rng.randint(1, 4)):
            words.append(rng.choice(PHRASES))
        text = " ".join(words)
        count += len(text.split())
        turns.append(
            f'<Turn speaker="spk{len(turns) % 2 + 1}" startTime="{t:.2f}" endTime="{t + 5:.2f}">'
            f'<Sync time="{t:.2f}"/>{text}</Turn>'
        )
        t += 5
    body = "".join(turns)
    return f'<?xml version="1.0" encoding="UTF-8"?><Trans><Episode><Section type="report" startTime="0" endTime="{t:.2f}">{body}</Section></Episode></Trans>'.encode()


def random_tables(n: int, n_preds: int, seed: int = 0):
    rng = random.Random(seed)
    adv_ptr, adv_len = array("i", [0]), array("i")
    for _ in range(n_preds):
        for p in range(n + 1):
            if p < n and rng.random() < 0.3:
                adv_len.append(rng.randint(1, min(2, n - p)))
            adv_ptr.append(len(adv_len))
    return adv_ptr, adv_len


def timed(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--tokens", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    cascade = load_cascade("ne") + load_cascade("de")
    doc = AnnotatedDocument.from_document(parse_transcription(synthetic_document(args.tokens)))

    # kernel alone: the largest transducer over one long stream
    _, t = max(cascade.passes, key=lambda p: p[1].n_states)
    ptr, pred, target, guard, _ = t.flat()
    n = args.tokens
    adv_ptr, adv_len = random_tables(n, len(t.predicates))
    guard_ok = array("b", [1] * (len(t.grammar.rules) * (n + 1)))

    print(f"{'backend':<8} {'kernel scan':>12} {'full cascade':>13}")
    results = {}
    for name in _kernel.available():
        k = _kernel.get(name)
        ks = timed(lambda: k.scan(t.n_states, ptr, pred, target, guard, n, adv_ptr, adv_len, guard_ok), args.repeat)
        full = timed(lambda: run_cascade(cascade, doc, backend=name), args.repeat)
        results[name] = (ks, full)
        print(f"{name:<8} {ks:>11.4f}s {full:>12.4f}s")
    if len(results) == 2:
        (pk, pf), (ck, cf) = results["python"], results["cython"]
        print(f"speedup  {pk / ck:>11.1f}x {pf / cf:>12.2f}x")
    same = {name: run_cascade(cascade, doc, backend=name).annotations for name in _kernel.available()}
    print("identical annotations:", len({tuple(v) for v in same.values()}) == 1)


if __name__ == "__main__":
    main()
