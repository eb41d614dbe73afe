"""Regenerates sacrebleu_cases.txt: random corpora scored by the sacrebleu package."""
import random

import sacrebleu

WORDS = "the a cat dog sat on mat olá, mundo. 3.14 1,000 (x) don't 9-5 &quot;hi&quot; !".split()


def sentence(rng, lo, hi):
    return " ".join(rng.choice(WORDS) for _ in range(rng.randint(lo, hi)))


def main():
    rng = random.Random(7)
    with open("sacrebleu_cases.txt", "w", encoding="utf-8") as out:
        for case in range(30):
            n = rng.randint(1, 6)
            lo, hi = (1, 4) if case % 3 == 0 else (3, 12)
            refs = [sentence(rng, lo, hi) for _ in range(n)]
            hyps = []
            for r in refs:
                words = r.split()
                if rng.random() < 0.5:
                    words = [w if rng.random() < 0.7 else rng.choice(WORDS) for w in words]
                else:
                    words = sentence(rng, lo, hi).split()
                hyps.append(" ".join(words))
            score = sacrebleu.corpus_bleu(hyps, [refs], tokenize="13a", smooth_method="exp").score
            out.write(f"case\t{score:.10f}\t{n}\n")
            for h, r in zip(hyps, refs):
                out.write(f"{h}\t{r}\n")


if __name__ == "__main__":
    main()
