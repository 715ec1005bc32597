"""Writes the golden candidate/reference corpus used by the metric oracle suite."""
import json
import random
import sys

CURATED = [
    ("service timeout caused outage", "network timeout caused the outage"),
    ("the cat sat", "the cat sat down"),
    ("the cat sat", "the cat sat"),
    ("cat the", "the cat"),
    ("alpha beta", "gamma delta"),
    ("The cat, sat.", "the cat sat"),
    ("Disk FULL on log volume!", "the log volume was full"),
    ("connections leaked from the pool", "the pool leaked connections"),
    ("retries failed after failing retry", "the retry failed and retries were failing"),
    ("certificate expired on frontend nodes", "frontend certificate expiry broke nodes"),
    ("the the the", "the the"),
    ("a b a b a b", "b a b a"),
    ("deadlock between procedures", "procedures deadlocked each other"),
    ("clock drift rejected tokens", "token validation rejected drifting clocks"),
    ("running runs ran", "run running runner"),
    ("the quick brown fox jumps", "the brown quick fox jumped"),
    ("misconfigured autoscaler removed capacity", "the autoscaler was misconfigured and removed capacity"),
    ("x", "x y z"),
    ("x y z", "x"),
    (" padded tokens　here ", "padded tokens here"),
    ("stale dns delegation record", "a stale delegation record in dns"),
    ("quota exceeded throttling storage", "storage throttling after quota exceeded"),
    ("generalization generalize general", "general generalizes generalization"),
    ("one two three four five six", "six five four three two one"),
    ("hot keys evicted by redis", "redis evicted hot keys"),
    ("null header dereferenced", "dereferenced null header"),
]

VOCAB = ["fail", "failed", "failing", "failure", "node", "nodes", "the", "a", "pool",
         "connect", "connection", "connected", "timeout", "timeouts", "disk", "run"]


def main(path):
    rng = random.Random(1729)
    pairs = [{"candidate": c, "reference": r} for c, r in CURATED]
    while len(pairs) < 64:
        c = " ".join(rng.choice(VOCAB) for _ in range(rng.randint(1, 8)))
        r = " ".join(rng.choice(VOCAB) for _ in range(rng.randint(1, 8)))
        pairs.append({"candidate": c, "reference": r})
    with open(path, "w", encoding="utf-8") as f:
        for p in pairs:
            f.write(json.dumps(p, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main(sys.argv[1])
