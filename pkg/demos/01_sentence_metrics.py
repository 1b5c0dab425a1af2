"""Sentence-level MT metrics: sentBLEU, chrF, TER, and METEOR-lite.

Each metric scores a hypothesis translation against a reference. They
form the supervision signal for metric estimation: the estimator later
learns to predict these numbers without seeing the reference at all.

Run:  python3 demos/01_sentence_metrics.py
"""

from metricest.metrics import chrf, meteor_lite, score_all, sent_bleu, ter

PAIRS = [
    # a near-miss: only the first word differs
    ("IT hat nicht funktioniert.", "Das hat nicht funktioniert."),
    # heavy reordering and paraphrase
    ("Die Polizei probiert neue, weniger tödliche Werkzeuge aus, während "
     "die Proteste anhalten.",
     "Während die Proteste weitergehen, testet die Polizei weniger "
     "tödliche Geräte"),
    # exact match
    ("Das Haus ist gross .", "Das Haus ist gross ."),
]


def main():
    print(f"{'hypothesis':<42} {'sentbleu':>9} {'chrf':>7} {'ter':>7} "
          f"{'meteor':>7}")
    for hyp, ref in PAIRS:
        scores = score_all(hyp, ref, ["sentbleu", "chrf", "ter", "meteor"])
        label = hyp if len(hyp) <= 40 else hyp[:37] + "..."
        print(f"{label:<42} {scores['sentbleu'].value:>9.4f} "
              f"{scores['chrf'].value:>7.4f} {scores['ter'].value:>7.4f} "
              f"{scores['meteor'].value:>7.4f}")

    print()
    print("Notes on behaviour:")
    print(f"  - sentBLEU smooths zero n-gram precisions, so disjoint "
          f"sentences still score > 0: "
          f"{sent_bleu('a b c d', 'w x y z').value:.4f}")
    print(f"  - chrF works on character n-grams and forgives tokenization: "
          f"chrf('ab c','abc') = {chrf('ab c', 'abc').value:.4f}")
    print(f"  - TER counts block shifts as single edits: "
          f"ter('c d a b','a b c d') = {ter('c d a b', 'a b c d').value:.4f}")
    print(f"  - METEOR-lite matches stems too: "
          f"meteor('running','runs') = "
          f"{meteor_lite('running', 'runs').value:.4f}")


if __name__ == "__main__":
    main()
