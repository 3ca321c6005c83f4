"""Pool-based active learning for discovering new dialogue slot types and values.

The library extracts candidate value spans from task-oriented dialogue
utterances, trains a weakly-supervised multi-task span classifier over a
pluggable contextual encoder, and iteratively selects spans for annotation
with uncertainty, diversity, or blended bi-criteria strategies.
"""

from .classifier import (
    ModelConfig,
    MultiTaskModel,
    TrainExample,
    TrainingConfig,
    expand_slot_head,
    multi_task_loss,
    new_model,
    predict,
    train,
)
from .corpus import (
    ALPools,
    CandidateSpan,
    CorpusError,
    Dataset,
    DatasetSplit,
    SlotCatalog,
    Utterance,
    init_pools,
    load_dataset,
    save_dataset,
    split_dataset,
)
from .encoder import (
    EncoderBackend,
    HashAttentionBackend,
    SpanRepresentation,
    context_representation,
    encode_span,
    inherent_representation,
)
from .evaluation import SlotEvalResult, curve_report, mean_of_differences, span_f1
from .extraction import (
    CapitalizedChunkMatcher,
    ExtractorOutput,
    FilterConfig,
    GazetteerMatcher,
    PatternMatcher,
    assign_weak_labels,
    extract_candidates,
    filter_candidates,
)
from .loop import (
    ALState,
    IterationRecord,
    OracleAnnotator,
    RunConfig,
    StoppingRule,
    evaluate_split,
    initialize_state,
    learning_curve,
    oracle_annotate,
    run,
)
from .persistence import CheckpointError, resume, save_state
from .sampling import (
    SampleScore,
    SelectionConfig,
    bald_disagreement,
    bald_score,
    bi_criteria_select,
    diversity_score,
    entropy_score,
    hybrid_select,
    margin_score,
    random_select,
    select_batch,
)
from .synthetic import SynthSpec, generate, generate_file, hotel_like_spec

__version__ = "0.1.0"
