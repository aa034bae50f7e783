"""tradetalk: turn natural-language trade instructions into validated orders,
ask for what's missing, execute against a simulated venue, and benchmark
providers on structured-output quality."""

from .orders import (
    ASK_ORDER,
    ExecutableOrder,
    FieldName,
    FieldState,
    IncompleteOrderError,
    Money,
    NOT_APPLICABLE,
    OrderDraft,
    Side,
    Strategy,
    SymbolDirectory,
    TickerSymbol,
    UNKNOWN,
    UnknownSymbolError,
    draft_to_json,
    draft_to_wire,
    finalize,
    missing_fields,
    money,
    pending_fields,
    present,
    resolve_symbol,
)
from .extract import (
    ExtractionPolicy,
    FieldDiff,
    NoJsonFound,
    SchemaViolation,
    UnclassifiableQuestion,
    classify_followup_question,
    compare_drafts,
    extract_json_block,
    parse_draft,
)
from .envelope import ReplyEnvelope, parse_reply_envelope
from .rulebot import rule_extract
from .gateway import (
    ChatTurn,
    CredentialMissing,
    GatewayError,
    GatewayTimeout,
    ProviderConfig,
    ProviderKind,
    RemoteError,
    Role,
    complete,
    default_directory,
    load_provider_config,
    render_system_prompt,
)
from .dialogue import (
    Intent,
    Session,
    SessionConfig,
    classify_intent,
    merge_answer,
    render_question,
    step,
)
from .exchange import (
    ExecutionReport,
    FillStatus,
    OversellRejected,
    Portfolio,
    PriceFeed,
    UnknownSymbolFeed,
    Venue,
    apply_fill,
    submit,
)
from .bench import (
    DatasetRecord,
    EvalOutcome,
    MetricsCounts,
    MetricsReport,
    compute_metrics,
    emit_report,
    evaluate_record,
    load_dataset,
    run_eval,
)
from .forge import NoiseSpec, ProtectedTokens, inject_noise, slice_text

__version__ = "0.1.0"
