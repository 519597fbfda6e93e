"""Generator implementations and the wire protocol client.

A generator answers two request kinds: produce the edit-span text for an
encoded context, and produce the system response for the same context plus
a KB-state category. In-process oracles additionally accept a begin_turn
hook so the pipeline can tell them which (dialogue, turn) is running; the
wire protocol has no such frame, so external generators must answer from
the input text alone.

Wire protocol, newline-delimited UTF-8 JSON over child stdio or TCP:

    request  {"id": 3, "kind": "lev", "input": "..."}
    request  {"id": 4, "kind": "response", "input": "...", "kb_state": "KB2"}
    reply    {"id": 3, "output": "..."}

Ids are strictly increasing per connection and exactly one request is in
flight at a time.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import select
import shlex
import socket
import subprocess
import time
from dataclasses import dataclass
from typing import Callable, Protocol, runtime_checkable

from .codec import serialize_full_state, serialize_lev
from .corpus import Corpus
from .kb import KbState
from .lev import DELETE, LevSpan, compute_lev
from .state import DialogueState, Schema


@runtime_checkable
class GeneratorContract(Protocol):
    def lev_request(self, input_text: str) -> str: ...

    def response_request(self, input_text: str, kb_state: KbState) -> str: ...


GeneratorFactory = Callable[[], "GeneratorContract"]


class GeneratorError(RuntimeError):
    """Transport failure, protocol violation, or an unanswerable request."""


class GoldOracle:
    """Replays the corpus: gold state diffs and gold responses per turn.

    Replies depend only on (dialogue id, turn index), set through
    begin_turn; the input text is ignored.
    """

    def __init__(self, corpus: Corpus):
        self._lev: dict[tuple[str, int], str] = {}
        self._response: dict[tuple[str, int], str] = {}
        self._position: tuple[str, int] | None = None
        schema = corpus.schema
        for dialogue in corpus.dialogues:
            prev = DialogueState()
            for t, turn in enumerate(dialogue.turns, start=1):
                span = compute_lev(prev, turn.gold_state, schema)
                self._lev[(dialogue.id, t)] = self._render(span, dialogue.id, t, schema)
                self._response[(dialogue.id, t)] = turn.gold_delex_response
                prev = turn.gold_state

    def _render(self, span: LevSpan, dialogue_id: str, t: int, schema: Schema) -> str:
        return serialize_lev(span, schema)

    def begin_turn(self, dialogue_id: str, turn_index: int) -> None:
        if (dialogue_id, turn_index) not in self._lev:
            raise GeneratorError(f"unknown turn: {dialogue_id!r} #{turn_index}")
        self._position = (dialogue_id, turn_index)

    def _where(self) -> tuple[str, int]:
        if self._position is None:
            raise GeneratorError("no turn selected; call begin_turn first")
        return self._position

    def lev_request(self, input_text: str) -> str:
        return self._lev[self._where()]

    def response_request(self, input_text: str, kb_state: KbState) -> str:
        return self._response[self._where()]


def _turn_rng(seed: int, dialogue_id: str, turn_index: int) -> random.Random:
    material = f"noise:{seed}:{dialogue_id}:{turn_index}"
    digest = hashlib.sha256(material.encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


class NoisyOracle(GoldOracle):
    """Gold oracle that corrupts each turn's span with probability p.

    A corrupted turn gets exactly one seeded edit: drop one edit, mangle one
    value, or inject an unknown slot token (which a tolerant parser drops
    again). Identical (p, seed) always corrupt identically.
    """

    def __init__(self, corpus: Corpus, p: float, seed: int):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"corruption probability out of range: {p}")
        self._p = p
        self._seed = seed
        self._schema = corpus.schema
        super().__init__(corpus)

    def _render(self, span: LevSpan, dialogue_id: str, t: int, schema: Schema) -> str:
        rng = _turn_rng(self._seed, dialogue_id, t)
        if rng.random() >= self._p:
            return serialize_lev(span, schema)
        return self._corrupt(span, schema, rng)

    def _junk_token(self, rng: random.Random, domain: str, schema: Schema) -> str:
        while True:
            token = "z" + "".join(rng.choice("abcdefghijklmnopqrstuvwxyz") for _ in range(5))
            if token not in schema.slot_set(domain):
                return token

    def _corrupt(self, span: LevSpan, schema: Schema, rng: random.Random) -> str:
        flat = [(domain, edit) for domain, edit in span.edits()]
        ops = []
        if flat:
            ops.append("drop")
        if any(edit.new_value is not DELETE for _, edit in flat):
            ops.append("mangle")
        ops.append("unknown_slot")
        op = rng.choice(ops)
        if op == "drop":
            victim = rng.randrange(len(flat))
            kept = {
                (domain, edit.slot): edit.new_value
                for i, (domain, edit) in enumerate(flat)
                if i != victim
            }
            return serialize_lev(LevSpan.from_edits(kept, schema), schema)
        if op == "mangle":
            candidates = [i for i, (_, edit) in enumerate(flat) if edit.new_value is not DELETE]
            victim = rng.choice(candidates)
            edits = {}
            for i, (domain, edit) in enumerate(flat):
                value = edit.new_value
                if i == victim:
                    value = self._junk_token(rng, domain, schema)
                edits[(domain, edit.slot)] = value
            return serialize_lev(LevSpan.from_edits(edits, schema), schema)
        # unknown_slot: wedge a bogus slot-value pair into the first block
        # (or a fresh block when the span is empty).
        text = serialize_lev(span, schema)
        tokens = text.split()
        domain = span.blocks[0][0] if span.blocks else schema.domains[0]
        bogus = [self._junk_token(rng, domain, schema), "zz"]
        if span.blocks:
            at = tokens.index(f"[{domain}]") + 1
            tokens[at:at] = bogus
        else:
            tokens[1:1] = [f"[{domain}]", *bogus]
        return " ".join(tokens)


class FullSpanOracle(GoldOracle):
    """Replays whole serialized gold states instead of diffs (the
    regenerate-from-scratch ablation)."""

    def __init__(self, corpus: Corpus):
        super().__init__(corpus)
        schema = corpus.schema
        for dialogue in corpus.dialogues:
            for t, turn in enumerate(dialogue.turns, start=1):
                self._lev[(dialogue.id, t)] = serialize_full_state(turn.gold_state, schema)


class _PipeChannel:
    """Line reader with a deadline over a child process stdout."""

    def __init__(self, stream):
        self._stream = stream
        self._fd = stream.fileno()
        self._buffer = bytearray()

    def read_line(self, timeout: float) -> bytes:
        deadline = time.monotonic() + timeout
        while True:
            newline = self._buffer.find(b"\n")
            if newline >= 0:
                line = bytes(self._buffer[:newline])
                del self._buffer[: newline + 1]
                return line
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TimeoutError
            ready, _, _ = select.select([self._fd], [], [], remaining)
            if not ready:
                raise TimeoutError
            chunk = os.read(self._fd, 65536)
            if not chunk:
                raise EOFError
            self._buffer.extend(chunk)

    def has_pending(self, timeout: float) -> bool:
        try:
            self._buffer.extend(self.read_line(timeout) + b"\n")
            return True
        except (TimeoutError, EOFError):
            return bool(self._buffer.strip())


class _ProcessTransport:
    def __init__(self, command: str):
        self.describe = f"exec:{command}"
        try:
            self._proc = subprocess.Popen(
                shlex.split(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=None,
            )
        except OSError as exc:
            raise GeneratorError(f"cannot start generator {command!r}: {exc}") from exc
        self._channel = _PipeChannel(self._proc.stdout)

    def send_line(self, line: str) -> None:
        try:
            self._proc.stdin.write(line.encode("utf-8") + b"\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise GeneratorError(f"{self.describe}: child closed stdin: {exc}") from exc

    def recv_line(self, timeout: float) -> str:
        try:
            return self._channel.read_line(timeout).decode("utf-8")
        except TimeoutError:
            raise GeneratorError(f"{self.describe}: no reply within {timeout:.1f}s") from None
        except EOFError:
            code = self._proc.poll()
            raise GeneratorError(f"{self.describe}: child exited (code {code})") from None

    def has_pending(self, timeout: float) -> bool:
        return self._channel.has_pending(timeout)

    def close(self) -> None:
        for stream in (self._proc.stdin, self._proc.stdout):
            try:
                stream.close()
            except OSError:
                pass
        try:
            self._proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait()


class _SocketTransport:
    def __init__(self, host: str, port: int):
        self.describe = f"tcp:{host}:{port}"
        try:
            self._sock = socket.create_connection((host, port), timeout=10)
        except OSError as exc:
            raise GeneratorError(f"cannot connect to {self.describe}: {exc}") from exc
        self._buffer = bytearray()

    def send_line(self, line: str) -> None:
        try:
            self._sock.sendall(line.encode("utf-8") + b"\n")
        except OSError as exc:
            raise GeneratorError(f"{self.describe}: send failed: {exc}") from exc

    def recv_line(self, timeout: float) -> str:
        deadline = time.monotonic() + timeout
        while True:
            newline = self._buffer.find(b"\n")
            if newline >= 0:
                line = bytes(self._buffer[:newline]).decode("utf-8")
                del self._buffer[: newline + 1]
                return line
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise GeneratorError(f"{self.describe}: no reply within {timeout:.1f}s")
            self._sock.settimeout(remaining)
            try:
                chunk = self._sock.recv(65536)
            except socket.timeout:
                raise GeneratorError(f"{self.describe}: no reply within {timeout:.1f}s") from None
            except OSError as exc:
                raise GeneratorError(f"{self.describe}: recv failed: {exc}") from exc
            if not chunk:
                raise GeneratorError(f"{self.describe}: connection closed")
            self._buffer.extend(chunk)

    def has_pending(self, timeout: float) -> bool:
        if self._buffer.strip():
            return True
        self._sock.settimeout(timeout)
        try:
            chunk = self._sock.recv(65536)
        except (socket.timeout, OSError):
            return False
        self._buffer.extend(chunk)
        return bool(self._buffer.strip())

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


class ExternalGenerator:
    """Wire-protocol client over a child process or a TCP connection."""

    def __init__(self, transport, timeout: float = 30.0):
        self._transport = transport
        self._timeout = timeout
        self._next_id = 0

    @classmethod
    def spawn(cls, command: str, timeout: float = 30.0) -> "ExternalGenerator":
        return cls(_ProcessTransport(command), timeout)

    @classmethod
    def connect(cls, host: str, port: int, timeout: float = 30.0) -> "ExternalGenerator":
        return cls(_SocketTransport(host, port), timeout)

    def _request(self, kind: str, input_text: str, kb_state: KbState | None = None) -> str:
        self._next_id += 1
        frame: dict = {"id": self._next_id, "kind": kind, "input": input_text}
        if kb_state is not None:
            frame["kb_state"] = kb_state.name
        self._transport.send_line(json.dumps(frame))
        line = self._transport.recv_line(self._timeout)
        where = self._transport.describe
        try:
            reply = json.loads(line)
        except json.JSONDecodeError:
            raise GeneratorError(f"{where}: reply is not JSON: {line!r}") from None
        if not isinstance(reply, dict):
            raise GeneratorError(f"{where}: reply is not an object: {line!r}")
        if reply.get("id") != self._next_id:
            raise GeneratorError(
                f"{where}: reply id {reply.get('id')!r} does not match request "
                f"id {self._next_id}: {line!r}"
            )
        output = reply.get("output")
        if not isinstance(output, str):
            raise GeneratorError(f"{where}: reply lacks a text output field: {line!r}")
        return output

    def lev_request(self, input_text: str) -> str:
        return self._request("lev", input_text)

    def response_request(self, input_text: str, kb_state: KbState) -> str:
        return self._request("response", input_text, kb_state)

    def close(self) -> None:
        self._transport.close()


@dataclass(frozen=True)
class ConformanceCheck:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ConformanceReport:
    checks: tuple[ConformanceCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def run_conformance(transport, timeout: float = 10.0) -> ConformanceReport:
    """Probe a wire generator for frame discipline.

    Checks: every reply is one line of JSON with exactly the request's id
    and a text output; replies stay in lockstep over several requests; no
    unsolicited frames follow the final reply.
    """
    checks: list[ConformanceCheck] = []
    probes = [
        ("lev reply frame", {"id": 1, "kind": "lev", "input": "<SOB> <EOB>"}),
        (
            "response reply frame",
            {"id": 2, "kind": "response", "input": "<EOB> hello <EOU>", "kb_state": "KB1"},
        ),
        ("id echo 3", {"id": 3, "kind": "lev", "input": "probe three"}),
        ("id echo 4", {"id": 4, "kind": "lev", "input": "probe four"}),
        ("id echo 5", {"id": 5, "kind": "response", "input": "probe five", "kb_state": "KB15"}),
    ]
    for name, frame in probes:
        try:
            transport.send_line(json.dumps(frame))
            line = transport.recv_line(timeout)
        except GeneratorError as exc:
            checks.append(ConformanceCheck(name, False, str(exc)))
            continue
        try:
            reply = json.loads(line)
        except json.JSONDecodeError:
            checks.append(ConformanceCheck(name, False, f"not JSON: {line!r}"))
            continue
        if not isinstance(reply, dict):
            checks.append(ConformanceCheck(name, False, f"not an object: {line!r}"))
        elif reply.get("id") != frame["id"]:
            checks.append(
                ConformanceCheck(name, False, f"id {reply.get('id')!r} for request {frame['id']}: {line!r}")
            )
        elif not isinstance(reply.get("output"), str):
            checks.append(ConformanceCheck(name, False, f"output missing or not text: {line!r}"))
        else:
            checks.append(ConformanceCheck(name, True))
    try:
        quiet = not transport.has_pending(0.2)
    except GeneratorError:
        quiet = True
    checks.append(
        ConformanceCheck(
            "no unsolicited frames",
            quiet,
            "" if quiet else "extra data after the final reply",
        )
    )
    return ConformanceReport(checks=tuple(checks))


def parse_generator_spec(
    spec: str,
    corpus: Corpus | None = None,
    timeout: float = 30.0,
) -> GeneratorFactory:
    """Turn a generator spec string into a factory of fresh generators.

    Forms: 'gold:', 'noisy:p=<float>,seed=<int>', 'exec:<command line>',
    'tcp:<host>:<port>'. The oracle forms need a corpus to replay.
    """
    scheme, _, rest = spec.partition(":")
    if scheme == "gold":
        if corpus is None:
            raise ValueError("gold generator needs a corpus")
        return lambda: GoldOracle(corpus)
    if scheme == "noisy":
        if corpus is None:
            raise ValueError("noisy generator needs a corpus")
        params = {}
        for part in filter(None, rest.split(",")):
            key, _, value = part.partition("=")
            params[key.strip()] = value.strip()
        try:
            p = float(params["p"])
            seed = int(params.get("seed", "0"))
        except (KeyError, ValueError) as exc:
            raise ValueError(f"bad noisy generator spec {spec!r}: {exc}") from exc
        return lambda: NoisyOracle(corpus, p=p, seed=seed)
    if scheme == "exec":
        if not rest:
            raise ValueError("exec generator needs a command")
        return lambda: ExternalGenerator.spawn(rest, timeout=timeout)
    if scheme == "tcp":
        host, _, port_text = rest.rpartition(":")
        try:
            port = int(port_text)
        except ValueError as exc:
            raise ValueError(f"bad tcp generator spec {spec!r}") from exc
        if not host:
            raise ValueError(f"bad tcp generator spec {spec!r}")
        return lambda: ExternalGenerator.connect(host, port, timeout=timeout)
    raise ValueError(f"unknown generator scheme {scheme!r}")
