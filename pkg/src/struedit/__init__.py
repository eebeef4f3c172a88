"""Structural knowledge editing for multi-hop question answering."""

from .baseline import EditMemory, baseline_answer, retrieve_edits
from .chain import (
    PromptTemplateSet,
    ReasoningChain,
    ReasoningSkeleton,
    extract_skeleton,
    generate_chain,
    load_templates,
    parse_chain_text,
    parse_skeleton_text,
)
from .matcher import CandidateQuery, MatchResult, MatcherConfig, lexical_score, match_entity, parse_selection
from .matcher import render_candidate_query, select_relation
from .oracle import OracleConfig, OracleRequest, OracleResponse, RemoteOracle, ScriptedOracle, record_transcript
from .pipeline import PipelineAnswer, PipelineConfig, answer_from_skeleton, answer_question, infer_path
from .store import (
    EditOperation,
    EntityId,
    FactTriple,
    KnowledgeStructure,
    ReasoningPath,
    RelationLabel,
    apply_edits,
    brute_force_paths,
    build_structure,
    objects_of,
    relations_of,
)

__version__ = "0.1.0"
