"""
Word-level language model fusion
================================

An ARPA bigram model is applied whenever a hypothesis appends the word
separator, and once more at the end of the utterance for the pending word
and the sentence end. The acoustic evidence below is ambiguous between
"ab" and "ac"; the LM breaks the tie.
"""

import math
import tempfile
from pathlib import Path

from fltop import DecoderConfig, EmissionMatrix, decode, parse_arpa
from fltop.decoder import prefix_lm_score
from fltop.lm import sentence_logprob
from fltop.vocab import from_tokens

ARPA = """\\data\\
ngram 1=5
ngram 2=2

\\1-grams:
-99 <s> -0.2
-0.3 ab -0.1
-0.3 ac -0.1
-0.5 </s>
-2.0 <unk>

\\2-grams:
-0.05 <s> ac
-0.9 <s> ab

\\end\\
"""

with tempfile.TemporaryDirectory() as d:
    path = Path(d) / "toy.arpa"
    path.write_text(ARPA)
    model = parse_arpa(path)

vocab = from_tokens(["_", "|", "a", "b", "c"], blank="_", word_sep="|")
# frame 2 slightly prefers "b" over "c"
em = EmissionMatrix([
    [0.05, 0.05, 0.85, 0.025, 0.025],
    [0.10, 0.02, 0.02, 0.44, 0.42],
    [0.90, 0.04, 0.02, 0.02, 0.02],
])

for lm, weight in ((None, 0.0), (model, 0.5), (model, 1.0)):
    cfg = DecoderConfig(lm_weight=weight, word_score=0.0)
    r = decode(em, vocab, lm, cfg)
    print(f"lm={'yes' if lm else 'no ':3} weight={weight:<4} -> {r.transcript!r:6} "
          f"acoustic {r.best.acoustic:7.3f}  lm {r.best.lm_score:7.3f}  total {r.best.score:7.3f}")

# the fused LM score is just ln(10) * weight * sentence log10 probability
cfg = DecoderConfig(lm_weight=1.0, word_score=0.0)
r = decode(em, vocab, model, cfg)
print("recomputed from transcript:",
      round(math.log(10) * sentence_logprob(model, r.transcript.split()), 6),
      "| from prefix:", round(prefix_lm_score(r.best.prefix, vocab, model, cfg), 6))
