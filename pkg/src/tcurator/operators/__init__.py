"""Trust operators: each one partitions queries and annotates its verdict."""
from .base import InvalidParameter, Partition, build_partition, mark, split_and_mark
from .crosslog import (
    JoinPair,
    adopt_candidates,
    enrich_log,
    join_logs,
    query_similarity,
)
from .session import (
    BEGINNER,
    DEFAULT_AGENT_PATTERNS,
    EXPERT,
    INTERMEDIATE,
    NON_INFORMATIVE,
    UNKNOWN_TOPIC,
    DedupMode,
    RobotConfig,
    Session,
    assign_topic,
    clean_robots,
    cluster_topics,
    deduplicate,
    expertise_level,
    filter_expertise,
    informativeness,
    load_topic_base,
    rank_schema,
    robotic_reason,
    sessionize,
)
from .single import (
    ANALYTIC,
    ORIGIN_CATEGORIES,
    STANDARD,
    UNANALYZABLE,
    UNKNOWN_ORIGIN,
    IpKnowledgeBase,
    KnowledgeBaseError,
    OrgEntry,
    classify_origin,
    eliminate_vulnerable,
    filter_complexity,
    filter_origin,
    is_blacklisted,
    load_blacklist,
    load_ip_knowledge,
    load_org_map,
    select_analytic,
)

__all__ = [
    "ANALYTIC",
    "BEGINNER",
    "DEFAULT_AGENT_PATTERNS",
    "DedupMode",
    "EXPERT",
    "INTERMEDIATE",
    "InvalidParameter",
    "IpKnowledgeBase",
    "JoinPair",
    "KnowledgeBaseError",
    "NON_INFORMATIVE",
    "ORIGIN_CATEGORIES",
    "OrgEntry",
    "Partition",
    "RobotConfig",
    "STANDARD",
    "Session",
    "UNANALYZABLE",
    "UNKNOWN_ORIGIN",
    "UNKNOWN_TOPIC",
    "adopt_candidates",
    "assign_topic",
    "build_partition",
    "classify_origin",
    "clean_robots",
    "cluster_topics",
    "deduplicate",
    "enrich_log",
    "eliminate_vulnerable",
    "expertise_level",
    "filter_complexity",
    "filter_expertise",
    "filter_origin",
    "informativeness",
    "is_blacklisted",
    "join_logs",
    "load_blacklist",
    "load_ip_knowledge",
    "load_org_map",
    "load_topic_base",
    "mark",
    "query_similarity",
    "rank_schema",
    "robotic_reason",
    "select_analytic",
    "sessionize",
    "split_and_mark",
]
