"""Frame-level token pruning for CTC beam-search decoding."""

from .decoder import (DecodeResult, DecoderConfig, FrameCandidates, Hypothesis,
                      decode, decode_exhaustive, expand, merge_duplicates,
                      partial_sort_desc, prune_frame, select_top_k)
from .emissions import (EmissionMatrix, SyntheticSpec, generate_corpus,
                        generate_synthetic, load_emissions, save_emissions,
                        softmax_row)
from .lm import LmState, NGramModel, parse_arpa, score_word, sentence_logprob
from .metrics import WerBreakdown, corpus_wer, edit_distance
from .stats import (DecodeStats, StatsSummary, best_beam_backtrace_indices,
                    record_selection, summarize)
from .vocab import (Vocabulary, from_tokens, id_to_token, letter_vocabulary,
                    load_vocab)

__version__ = "0.1.0"
