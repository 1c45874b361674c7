from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest

from irag.errors import GatewayError, GatewayTimeoutError, JudgeInvalidError
from irag.gateway import (
    ChatRequest,
    HttpGateway,
    MockGateway,
    gateway_from_env,
    gateway_from_url,
    judge,
)
from irag.gateway.mock import load_playbook
from tests.conftest import PLAYBOOKS_DIR


# ---------------------------------------------------------------------------
# Mock gateway
# ---------------------------------------------------------------------------


def test_mock_chat_is_deterministic(mock_gateway):
    request = ChatRequest(model="", system_prompt="sys", user_prompt="ping")
    first = mock_gateway.chat(request)
    second = mock_gateway.chat(request)
    assert first.text == second.text
    assert MockGateway(seed=1, dim=16).chat(request).text == first.text
    assert MockGateway(seed=2, dim=16).chat(request).text != first.text


def test_mock_embed_unit_norm_and_purity():
    gateway = MockGateway(seed=1, dim=16)
    vectors = gateway.embed(["alpha", "alpha", "beta"])
    assert vectors.shape == (3, 16)
    assert vectors.dtype == np.float32
    assert np.allclose(np.linalg.norm(vectors, axis=1), 1.0, atol=1e-6)
    assert (vectors[0] == vectors[1]).all()
    assert not (vectors[0] == vectors[2]).all()


def test_mock_embed_preserves_order_and_length(mock_gateway):
    texts = [f"text {i}" for i in range(7)]
    vectors = mock_gateway.embed(texts)
    assert vectors.shape[0] == len(texts)
    singles = [mock_gateway.embed([t])[0] for t in texts]
    for row, single in zip(vectors, singles):
        assert (row == single).all()


def test_mock_embed_preconditions(mock_gateway):
    with pytest.raises(ValueError):
        mock_gateway.embed([])
    with pytest.raises(ValueError):
        mock_gateway.embed([""])


def test_mock_playbook_scripted_reply():
    gateway = MockGateway(seed=1, playbook={"greet": "hello"})
    response = gateway.chat(ChatRequest(model="", system_prompt="", user_prompt="please greet me"))
    assert response.text == "hello"


def test_mock_playbook_longest_key_wins():
    gateway = MockGateway(seed=1, playbook={"greet": "short", "greet me": "long"})
    response = gateway.chat(ChatRequest(model="", system_prompt="", user_prompt="greet me"))
    assert response.text == "long"


def test_mock_playbook_sequence_advances_then_repeats():
    gateway = MockGateway(seed=1, playbook={"key": ["first", "second"]})
    request = ChatRequest(model="", system_prompt="", user_prompt="key")
    assert gateway.chat(request).text == "first"
    assert gateway.chat(request).text == "second"
    assert gateway.chat(request).text == "second"


def test_mock_from_url_and_playbook_file():
    gateway = MockGateway.from_url(
        "mock:7", playbook_path=PLAYBOOKS_DIR / "cooperative.json"
    )
    assert gateway.seed == 7
    assert gateway.playbook["TASK: chunk relevance"] == "@top_scale"


def test_mock_scale_directives():
    gateway = MockGateway(seed=1, playbook={"grade this": "@bottom_scale"})
    reply = gateway.chat(ChatRequest(
        model="", system_prompt="grade this\n\nAllowed scores: 0, 5, 10",
        user_prompt="payload"))
    assert json.loads(reply.text)["score"] == 0


def test_load_playbook_rejects_bad_values(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"k": {"nested": true}}')
    with pytest.raises(ValueError):
        load_playbook(path)


def test_gateway_from_env_selects_mock():
    gateway = gateway_from_env({"GATEWAY_URL": "mock:3"})
    assert isinstance(gateway, MockGateway)
    assert gateway.seed == 3
    http = gateway_from_env({"GATEWAY_URL": "http://models.local:9999",
                             "GATEWAY_CHAT_MODEL": "m1"})
    assert isinstance(http, HttpGateway)
    assert http.chat_model == "m1"


# ---------------------------------------------------------------------------
# judge
# ---------------------------------------------------------------------------


def test_judge_parses_scripted_verdict():
    gateway = MockGateway(
        seed=1, playbook={"grade this": '{"score": 1, "justification": "matches"}'}
    )
    verdict = judge(gateway, "grade this", "ANSWER: x", scale=[0.0, 1.0])
    assert verdict.score == 1.0
    assert verdict.justification == "matches"
    assert verdict.raw.startswith("{")


def test_judge_repairs_after_non_json_reply():
    gateway = MockGateway(
        seed=1,
        playbook={"grade this": ["score: 1", '{"score": 1, "justification": "ok"}']},
    )
    verdict = judge(gateway, "grade this", "payload", scale=[0.0, 1.0])
    assert verdict.score == 1.0


def test_judge_rejects_out_of_scale_and_exhausts_retries():
    gateway = MockGateway(
        seed=1, playbook={"grade this": '{"score": 7, "justification": "?"}'}
    )
    with pytest.raises(JudgeInvalidError) as excinfo:
        judge(gateway, "grade this", "payload", scale=[0.0, 5.0, 10.0])
    assert '"score": 7' in excinfo.value.raw


def test_judge_requires_scale(mock_gateway):
    with pytest.raises(ValueError):
        judge(mock_gateway, "grade", "payload", scale=[])


def test_judge_default_mock_picks_max_of_scale(mock_gateway):
    verdict = judge(mock_gateway, "TASK: anything", "payload", scale=[0.0, 5.0, 10.0])
    assert verdict.score == 10.0


def test_judge_tolerates_fenced_json():
    gateway = MockGateway(
        seed=1,
        playbook={"grade this": '```json\n{"score": 0, "justification": "no"}\n```'},
    )
    verdict = judge(gateway, "grade this", "payload", scale=[0.0, 1.0])
    assert verdict.score == 0.0


# ---------------------------------------------------------------------------
# HTTP gateway against a real local server
# ---------------------------------------------------------------------------


class _Script:
    """Programmable responses for the stub model server."""

    def __init__(self):
        self.fail_first = 0
        self.requests: list[tuple[str, dict]] = []


class _Handler(BaseHTTPRequestHandler):
    script: _Script

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length) or b"{}")
        self.script.requests.append((self.path, body))
        if self.script.fail_first > 0:
            self.script.fail_first -= 1
            self.send_response(503)
            self.end_headers()
            self.wfile.write(b"busy")
            return
        if self.path == "/api/chat":
            payload = {"message": {"content": f"echo:{body['messages'][-1]['content']}"}}
        elif self.path == "/api/embeddings":
            payload = {"embeddings": [[float(len(t)), 1.0] for t in body["input"]]}
        elif self.path == "/api/bad-json":
            self.send_response(200)
            self.end_headers()
            self.wfile.write(b"not json")
            return
        else:
            self.send_response(404)
            self.end_headers()
            self.wfile.write(b"no such endpoint")
            return
        data = json.dumps(payload).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_server():
    script = _Script()
    handler = type("Handler", (_Handler,), {"script": script})
    server = HTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_port}", script
    finally:
        server.shutdown()
        thread.join(timeout=5)


def _gateway(url, **kwargs):
    kwargs.setdefault("sleeper", lambda _s: None)
    return HttpGateway(url, chat_model="chat-m", embed_model="embed-m", **kwargs)


def test_http_chat_wire_format(stub_server):
    url, script = stub_server
    gateway = _gateway(url)
    response = gateway.chat(
        ChatRequest(model="", system_prompt="sys", user_prompt="hi",
                    temperature=0.3, max_tokens=64, response_format="json_object")
    )
    assert response.text == "echo:hi"
    assert response.model == "chat-m"
    path, body = script.requests[-1]
    assert path == "/api/chat"
    assert body["model"] == "chat-m"
    assert body["messages"] == [
        {"role": "system", "content": "sys"},
        {"role": "user", "content": "hi"},
    ]
    assert body["options"] == {"temperature": 0.3, "num_predict": 64}
    assert body["format"] == "json"
    assert body["stream"] is False


def test_http_embed_wire_format(stub_server):
    url, script = stub_server
    vectors = _gateway(url).embed(["ab", "wxyz"])
    assert vectors.shape == (2, 2)
    assert vectors.dtype == np.float32
    assert vectors[0, 0] == 2.0 and vectors[1, 0] == 4.0
    path, body = script.requests[-1]
    assert path == "/api/embeddings"
    assert body == {"model": "embed-m", "input": ["ab", "wxyz"]}


def test_http_retries_transient_5xx(stub_server):
    url, script = stub_server
    script.fail_first = 2
    response = _gateway(url).chat(
        ChatRequest(model="", system_prompt="", user_prompt="retry me")
    )
    assert response.text == "echo:retry me"
    assert len([r for r in script.requests if r[0] == "/api/chat"]) == 3


def test_http_gives_up_after_three_retries(stub_server):
    url, script = stub_server
    script.fail_first = 99
    with pytest.raises(GatewayError) as excinfo:
        _gateway(url).chat(ChatRequest(model="", system_prompt="", user_prompt="x"))
    assert excinfo.value.status == 503
    assert len(script.requests) == 4  # initial attempt + 3 retries


def test_http_unreachable_endpoint_errors_after_retries():
    gateway = _gateway("http://127.0.0.1:9")  # discard port: nothing listens
    with pytest.raises(GatewayError):
        gateway.chat(ChatRequest(model="", system_prompt="", user_prompt="x"))


def test_http_4xx_fails_fast(stub_server):
    url, script = stub_server
    gateway = _gateway(url)
    gateway._post  # noqa: B018 - sanity that attribute exists
    with pytest.raises(GatewayError) as excinfo:
        gateway._post("/api/nope", {})
    assert excinfo.value.status == 404
    assert len(script.requests) == 1


def test_http_embed_rejects_ragged_vectors():
    class RaggedSession:
        def post(self, *args, **kwargs):
            class R:
                status_code = 200

                def json(self):
                    return {"embeddings": [[1.0, 2.0], [1.0]]}

            return R()

    gateway = HttpGateway("http://x", chat_model="c", embed_model="e",
                          session=RaggedSession(), sleeper=lambda _s: None)
    with pytest.raises(GatewayError, match="ragged"):
        gateway.embed(["a", "b"])


def test_http_timeout_raises_timeout_error(stub_server):
    url, _script = stub_server

    class SlowSession:
        def post(self, *args, **kwargs):
            import requests

            raise requests.Timeout("too slow")

    gateway = HttpGateway(url, chat_model="c", embed_model="e",
                          session=SlowSession(), sleeper=lambda _s: None)
    with pytest.raises(GatewayTimeoutError):
        gateway.chat(ChatRequest(model="", system_prompt="", user_prompt="x"))


def test_gateway_from_url_dispatch():
    assert isinstance(gateway_from_url("mock:11"), MockGateway)
    assert isinstance(gateway_from_url("http://models:1234", chat_model="c"), HttpGateway)
