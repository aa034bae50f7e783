"""Uniform chat-completion interface: remote HTTP providers plus the
built-in rule-based provider, and the system prompt they all receive.

Remote calls use the common chat-completions HTTP shape (messages in,
choices out).  Credentials are read from the environment only; a config
file never holds a key.  The rule-based kind performs no network activity.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

import httpx

from .orders import SymbolDirectory
from .rulebot import rule_extract

RETRYABLE_STATUS = frozenset({429, 500, 502, 503, 504})
_BACKOFF_BASE_S = 1.0


class Role(Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


@dataclass(frozen=True)
class ChatTurn:
    role: Role
    content: str

    def __post_init__(self) -> None:
        if not self.content:
            raise ValueError("chat turn content must be non-empty")


class ProviderKind(Enum):
    RULE_BASED = "rule"
    REMOTE_CHAT = "remote"


class GatewayError(Exception):
    """Base for provider failures."""


class CredentialMissing(GatewayError):
    def __init__(self, env_name: str):
        self.env_name = env_name
        super().__init__(f"credential environment variable {env_name} is not set")


class RemoteError(GatewayError):
    def __init__(self, status: int, body: str):
        self.status = status
        self.body = body
        super().__init__(f"provider returned HTTP {status}: {body[:200]}")


class GatewayTimeout(GatewayError):
    pass


@dataclass(frozen=True)
class ProviderConfig:
    """One provider endpoint.  Network fields are ignored for the rule kind."""

    kind: ProviderKind = ProviderKind.RULE_BASED
    name: str = "rule"
    endpoint: str = ""
    model: str = ""
    credential_env: str = ""
    timeout_s: float = 30.0
    max_retries: int = 3
    temperature: float = 0.0
    symbols_path: str = ""

    def __post_init__(self) -> None:
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be > 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be within [0, 2]")
        if self.kind is ProviderKind.REMOTE_CHAT and not self.endpoint:
            raise ValueError("remote provider needs an endpoint URL")


def load_provider_config(path: str | Path) -> ProviderConfig:
    """Read a key=value provider config file.

    Recognized keys: kind (rule|remote), name, endpoint, model,
    credential_env, timeout_s, max_retries, temperature, symbols_path.
    '#' starts a comment.  Credentials are named, never stored.
    """
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip().strip('"')
    kwargs: dict = {}
    if "kind" in values:
        try:
            kwargs["kind"] = ProviderKind(values.pop("kind"))
        except ValueError:
            raise ValueError(f"{path}: kind must be 'rule' or 'remote'") from None
    for key in ("name", "endpoint", "model", "credential_env", "symbols_path"):
        if key in values:
            kwargs[key] = values.pop(key)
    for key, cast in (("timeout_s", float), ("max_retries", int), ("temperature", float)):
        if key in values:
            try:
                kwargs[key] = cast(values.pop(key))
            except ValueError:
                raise ValueError(f"{path}: {key} must be a number") from None
    if values:
        raise ValueError(f"{path}: unknown keys: {', '.join(sorted(values))}")
    return ProviderConfig(**kwargs)


def default_directory(symbols_path: str | Path | None = None) -> SymbolDirectory:
    """Built-in pairs merged with the packaged (or given) symbols file."""
    if symbols_path:
        return SymbolDirectory.from_file(symbols_path)
    with resources.as_file(resources.files("tradetalk.data").joinpath("symbols.txt")) as p:
        return SymbolDirectory.from_file(p)


# -- System prompt -------------------------------------------------------------

_PROMPT_TEMPLATE = """\
You are a trading assistant that converts a user's message into a structured
stock order.  Reply with exactly one JSON object and nothing else, shaped as:

{{
  "order": {{"strategy": ..., "symbol": ..., "order_type": ..., "price": ..., "quantity": ...}},
  "follow_up": [list of order field names you still need to ask the user about],
  "question_texts": [one question per follow_up entry, same order],
  "non_trade": false
}}

Order field rules:
- "strategy" is either "market order" or "limit order".  A limit order buys
  or sells at a predetermined price or better, and may never execute if the
  market does not reach that price.  A market order executes immediately at
  the best available price and has no price of its own.
- "symbol" is the listing code as a string of 5 or 6 digits.
- "order_type" is "buy" or "sell".
- "price" is a positive number for a limit order.  For a market order the
  price is not applicable: write the string "None".
- "quantity" is a positive integer number of shares.
- Any detail the message does not state is unknown: write JSON null (not the
  string "null"), and list that field in "follow_up".
- Never invent a symbol code.  If the company is not in the list below, leave
  "symbol" null and ask.
- If the message is not a trade instruction, set every order field to null
  and "non_trade" to true.

Known companies:
{symbol_lines}
"""


def render_system_prompt(directory: SymbolDirectory) -> str:
    """Deterministic system prompt embedding the schema and symbol hints."""
    lines = "\n".join(
        f"- {alias} -> {directory.entries[alias]}" for alias in sorted(directory.entries)
    )
    return _PROMPT_TEMPLATE.format(symbol_lines=lines)


# -- Completion ----------------------------------------------------------------


def _validate_transcript(transcript: list[ChatTurn]) -> None:
    if not transcript or transcript[0].role is not Role.SYSTEM:
        raise ValueError("transcript must start with a system turn")
    if any(turn.role is Role.SYSTEM for turn in transcript[1:]):
        raise ValueError("transcript must contain exactly one system turn")


def _rule_reply(transcript: list[ChatTurn], cfg: ProviderConfig) -> str:
    directory = default_directory(cfg.symbols_path or None)
    last_user = next((t for t in reversed(transcript) if t.role is Role.USER), None)
    if last_user is None:
        raise ValueError("rule provider needs at least one user turn")
    return rule_extract(last_user.content, directory).to_reply_text()


def _remote_reply(
    transcript: list[ChatTurn],
    cfg: ProviderConfig,
    transport: httpx.BaseTransport | None,
) -> str:
    headers = {"Content-Type": "application/json"}
    if cfg.credential_env:
        key = os.environ.get(cfg.credential_env)
        if not key:
            raise CredentialMissing(cfg.credential_env)
        headers["Authorization"] = f"Bearer {key}"
    payload = {
        "model": cfg.model,
        "messages": [{"role": t.role.value, "content": t.content} for t in transcript],
        "temperature": cfg.temperature,
    }

    last_error: GatewayError | None = None
    for attempt in range(cfg.max_retries + 1):
        if attempt:
            time.sleep(_BACKOFF_BASE_S * 2 ** (attempt - 1))
        try:
            with httpx.Client(timeout=cfg.timeout_s, transport=transport) as client:
                response = client.post(cfg.endpoint, json=payload, headers=headers)
        except httpx.TimeoutException:
            last_error = GatewayTimeout(f"provider timed out after {cfg.timeout_s}s")
            continue
        except httpx.HTTPError as exc:
            last_error = RemoteError(0, str(exc))
            continue
        if response.status_code == 200:
            try:
                return response.json()["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError, ValueError) as exc:
                raise RemoteError(200, f"malformed completion body: {response.text[:200]}") from exc
        if response.status_code in RETRYABLE_STATUS:
            last_error = RemoteError(response.status_code, response.text)
            continue
        raise RemoteError(response.status_code, response.text)
    assert last_error is not None
    raise last_error


def complete(
    transcript: list[ChatTurn],
    cfg: ProviderConfig,
    transport: httpx.BaseTransport | None = None,
) -> str:
    """Run one chat completion and return the reply text.

    The rule-based kind is pure and never touches the network.  Remote kinds
    retry transient failures (timeouts, 429, 5xx) with 1s/2s/4s backoff up
    to cfg.max_retries.  ``transport`` lets tests stub the HTTP layer.
    """
    _validate_transcript(transcript)
    if cfg.kind is ProviderKind.RULE_BASED:
        return _rule_reply(transcript, cfg)
    return _remote_reply(transcript, cfg, transport)
