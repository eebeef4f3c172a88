from .dataset import MultiHopCase, ingest_mquake, load_mquake
from .evaluate import EvaluationReport, HarnessConfig, answer_is_correct, run_evaluation
from .memory import MemorySpec, build_edit_memory
