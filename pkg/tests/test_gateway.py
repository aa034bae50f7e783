from __future__ import annotations

import json

import httpx
import pytest

import tradetalk.gateway as gateway
from tradetalk.envelope import parse_reply_envelope
from tradetalk.gateway import (
    ChatTurn,
    CredentialMissing,
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
from tradetalk.orders import FieldName, SymbolDirectory


def transcript(user_text: str) -> list[ChatTurn]:
    return [ChatTurn(Role.SYSTEM, "system prompt"), ChatTurn(Role.USER, user_text)]


class TestChatTurn:
    def test_empty_content_rejected(self):
        with pytest.raises(ValueError):
            ChatTurn(Role.USER, "")

    def test_transcript_must_start_with_system(self):
        with pytest.raises(ValueError):
            complete([ChatTurn(Role.USER, "hi")], ProviderConfig())

    def test_single_system_turn_enforced(self):
        turns = [
            ChatTurn(Role.SYSTEM, "a"),
            ChatTurn(Role.SYSTEM, "b"),
            ChatTurn(Role.USER, "hi"),
        ]
        with pytest.raises(ValueError):
            complete(turns, ProviderConfig())


class TestProviderConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"timeout_s": 0},
            {"max_retries": -1},
            {"temperature": 2.5},
            {"kind": ProviderKind.REMOTE_CHAT},  # endpoint required
        ],
    )
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            ProviderConfig(**kwargs)

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "provider.conf"
        path.write_text(
            "# remote endpoint\n"
            "kind = remote\n"
            "name = qwen\n"
            'endpoint = "https://example.test/v1/chat/completions"\n'
            "model = qwen-max\n"
            "credential_env = QWEN_API_KEY\n"
            "timeout_s = 20\n"
            "max_retries = 2\n"
            "temperature = 0\n",
            encoding="utf-8",
        )
        cfg = load_provider_config(path)
        assert cfg.kind is ProviderKind.REMOTE_CHAT
        assert cfg.endpoint == "https://example.test/v1/chat/completions"
        assert cfg.max_retries == 2 and cfg.timeout_s == 20.0

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "provider.conf"
        path.write_text("kind = rule\napi_key = sk-123\n", encoding="utf-8")
        with pytest.raises(ValueError):
            load_provider_config(path)


class TestSystemPrompt:
    def test_deterministic(self, directory):
        assert render_system_prompt(directory) == render_system_prompt(directory)

    def test_contains_schema_and_tristate_rules(self, directory):
        prompt = render_system_prompt(directory)
        for key in ("strategy", "symbol", "order_type", "price", "quantity"):
            assert f'"{key}"' in prompt
        assert '"None"' in prompt and "null" in prompt
        assert "market order" in prompt and "limit order" in prompt

    def test_extra_alias_listed(self, directory):
        extra = SymbolDirectory.from_pairs([("Acme Corp", "88888")])
        prompt = render_system_prompt(extra)
        assert "acme corp -> 88888" in prompt


class TestRuleProvider:
    def test_row1_reply_is_gold_envelope(self, directory, block_network):
        reply = complete(transcript(
            "If Moutai's stock price can fall to 1800, I will take the opportunity "
            "to stock up and plan to buy 200 shares of it."
        ), ProviderConfig())
        env = parse_reply_envelope(reply)
        assert env.follow_up == ()
        wire = json.loads(reply)["order"]
        assert wire == {
            "strategy": "limit order",
            "symbol": "600519",
            "order_type": "buy",
            "price": 1800.0,
            "quantity": 200,
        }

    def test_non_trade_reply(self, directory, block_network):
        env = parse_reply_envelope(complete(transcript("hello there"), ProviderConfig()))
        assert env.non_trade and set(env.follow_up) == set(FieldName)

    def test_uses_last_user_turn(self, block_network):
        turns = transcript("ignore me") + [
            ChatTurn(Role.ASSISTANT, "ok"),
            ChatTurn(Role.USER, "buy 100 shares of Tencent at market price"),
        ]
        env = parse_reply_envelope(complete(turns, ProviderConfig()))
        assert env.order.symbol.value.code == "00700"


def remote_cfg(**overrides) -> ProviderConfig:
    kwargs = dict(
        kind=ProviderKind.REMOTE_CHAT,
        name="fake",
        endpoint="https://example.test/v1/chat/completions",
        model="fake-model",
        credential_env="FAKE_PROVIDER_KEY",
        max_retries=2,
    )
    kwargs.update(overrides)
    return ProviderConfig(**kwargs)


def chat_response(text: str) -> httpx.Response:
    return httpx.Response(200, json={"choices": [{"message": {"content": text}}]})


class TestRemoteProvider:
    def test_success_path(self, monkeypatch):
        monkeypatch.setenv("FAKE_PROVIDER_KEY", "sk-test")
        seen: dict = {}

        def handler(request: httpx.Request) -> httpx.Response:
            seen["auth"] = request.headers.get("authorization")
            seen["payload"] = json.loads(request.content)
            return chat_response("the reply")

        reply = complete(
            transcript("hi"), remote_cfg(), transport=httpx.MockTransport(handler)
        )
        assert reply == "the reply"
        assert seen["auth"] == "Bearer sk-test"
        assert seen["payload"]["model"] == "fake-model"
        assert seen["payload"]["messages"][0]["role"] == "system"
        assert seen["payload"]["temperature"] == 0.0

    def test_credential_missing(self, monkeypatch):
        monkeypatch.delenv("FAKE_PROVIDER_KEY", raising=False)
        with pytest.raises(CredentialMissing):
            complete(transcript("hi"), remote_cfg())

    def test_retries_on_429_then_succeeds(self, monkeypatch):
        monkeypatch.setenv("FAKE_PROVIDER_KEY", "sk-test")
        sleeps: list[float] = []
        monkeypatch.setattr(gateway.time, "sleep", sleeps.append)
        calls = iter([httpx.Response(429, text="slow down"), chat_response("ok")])

        reply = complete(
            transcript("hi"),
            remote_cfg(),
            transport=httpx.MockTransport(lambda request: next(calls)),
        )
        assert reply == "ok"
        assert sleeps == [1.0]

    def test_retries_exhausted(self, monkeypatch):
        monkeypatch.setenv("FAKE_PROVIDER_KEY", "sk-test")
        sleeps: list[float] = []
        monkeypatch.setattr(gateway.time, "sleep", sleeps.append)

        with pytest.raises(RemoteError) as exc:
            complete(
                transcript("hi"),
                remote_cfg(max_retries=3),
                transport=httpx.MockTransport(lambda request: httpx.Response(503, text="down")),
            )
        assert exc.value.status == 503
        assert sleeps == [1.0, 2.0, 4.0]

    def test_timeout_surfaces_after_retries(self, monkeypatch):
        monkeypatch.setenv("FAKE_PROVIDER_KEY", "sk-test")
        monkeypatch.setattr(gateway.time, "sleep", lambda s: None)

        def handler(request: httpx.Request) -> httpx.Response:
            raise httpx.ReadTimeout("too slow")

        with pytest.raises(GatewayTimeout):
            complete(transcript("hi"), remote_cfg(), transport=httpx.MockTransport(handler))

    def test_client_error_is_not_retried(self, monkeypatch):
        monkeypatch.setenv("FAKE_PROVIDER_KEY", "sk-test")
        attempts = []

        def handler(request: httpx.Request) -> httpx.Response:
            attempts.append(1)
            return httpx.Response(400, text="bad request")

        with pytest.raises(RemoteError):
            complete(transcript("hi"), remote_cfg(), transport=httpx.MockTransport(handler))
        assert len(attempts) == 1

    def test_malformed_body(self, monkeypatch):
        monkeypatch.setenv("FAKE_PROVIDER_KEY", "sk-test")
        with pytest.raises(RemoteError):
            complete(
                transcript("hi"),
                remote_cfg(),
                transport=httpx.MockTransport(
                    lambda request: httpx.Response(200, json={"nope": True})
                ),
            )


def test_default_directory_merges_packaged_file():
    directory = default_directory()
    assert directory.lookup("Skyworth").code == "000810"
    assert directory.lookup("Moutai").code == "600519"
