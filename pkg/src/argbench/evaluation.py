"""Answer parsing and resumable evaluation runs."""

from __future__ import annotations

import enum
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

from argbench.gateway import HttpChatClient, ModelClient, ModelConfig, ModelReply, build_client
from argbench.puzzles import PuzzleInstance

log = logging.getLogger(__name__)

_MARKER = "answer:"


class Verdict(str, enum.Enum):
    YES = "yes"
    NO = "no"
    UNPARSEABLE = "unparseable"


def _first_word(text: str) -> str:
    word = []
    for ch in text:
        if ch.isalpha():
            word.append(ch)
        elif word:
            break
    return "".join(word)


def parse_answer(raw: str) -> Verdict:
    """Extract the yes/no verdict from a model reply.

    Uses the first word after the last ``answer:`` marker. Without a marker the
    whole reply must be a bare yes or no.
    """
    pos = raw.lower().rfind(_MARKER)
    if pos >= 0:
        word = _first_word(raw[pos + len(_MARKER):]).lower()
    else:
        word = raw.strip().lower()
    if word == "yes":
        return Verdict.YES
    if word == "no":
        return Verdict.NO
    return Verdict.UNPARSEABLE


@dataclass
class EvalRecord:
    instance_id: str
    label: bool
    verdict: Verdict | None
    correct: bool | None
    raw_text: str
    latency_ms: float
    status: str
    attempts: int = 1
    error: str = ""

    @property
    def parsed(self) -> bool:
        return self.status == "ok" and self.verdict in (Verdict.YES, Verdict.NO)

    @classmethod
    def from_reply(cls, reply: ModelReply, label: bool) -> EvalRecord:
        if reply.status != "ok":
            return cls(reply.instance_id, label, None, None, "", reply.latency_ms,
                       reply.status, reply.attempts, reply.error)
        verdict = parse_answer(reply.raw_text)
        correct = None if verdict is Verdict.UNPARSEABLE else (verdict is Verdict.YES) == label
        return cls(reply.instance_id, label, verdict, correct, reply.raw_text,
                   reply.latency_ms, "ok", reply.attempts)

    def to_dict(self) -> dict:
        row = asdict(self)
        row["label"] = "yes" if self.label else "no"
        row["verdict"] = self.verdict.value if self.verdict else None
        return row

    @classmethod
    def from_dict(cls, row: dict) -> EvalRecord:
        return cls(
            instance_id=row["instance_id"],
            label=row["label"] == "yes",
            verdict=Verdict(row["verdict"]) if row.get("verdict") else None,
            correct=row.get("correct"),
            raw_text=row.get("raw_text", ""),
            latency_ms=float(row.get("latency_ms", 0.0)),
            status=row["status"],
            attempts=int(row.get("attempts", 1)),
            error=row.get("error", ""),
        )


def load_records(path: str | Path) -> list[EvalRecord]:
    """Read a results file; a truncated final line from an interrupted run is ignored."""
    path = Path(path)
    if not path.exists():
        return []
    records = []
    lines = path.read_text(encoding="utf-8").splitlines()
    for line_no, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            records.append(EvalRecord.from_dict(json.loads(line)))
        except (ValueError, KeyError) as exc:
            if line_no == len(lines):
                log.warning("%s: dropping truncated last line", path)
                break
            raise ValueError(f"{path}: line {line_no}: {exc}") from exc
    return records


def _check_writable(path: Path) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "a", encoding="utf-8"):
            pass
    except OSError as exc:
        raise PermissionError(f"run path {path} is not writable: {exc}") from exc


def _trim_partial_tail(path: Path) -> None:
    data = path.read_bytes()
    if data and not data.endswith(b"\n"):
        with open(path, "r+b") as fh:
            fh.truncate(data.rfind(b"\n") + 1)


def run_evaluation(
    dataset: Sequence[PuzzleInstance],
    config: ModelConfig,
    run_path: str | Path,
    client: ModelClient | None = None,
) -> list[EvalRecord]:
    """Query the model for every instance not yet recorded at ``run_path``.

    Results are appended as JSON Lines in dataset order, so an interrupted run
    picks up where it stopped. Returns one record per dataset instance.
    """
    if not dataset:
        raise ValueError("dataset is empty")
    run_path = Path(run_path)
    _check_writable(run_path)
    _trim_partial_tail(run_path)

    done = {r.instance_id: r for r in load_records(run_path)}
    todo = [inst for inst in dataset if inst.id not in done]
    if todo:
        log.info("%d of %d instances to query", len(todo), len(dataset))
        owns_client = client is None
        client = client or build_client(config)
        pool = ThreadPoolExecutor(max_workers=config.max_concurrency)
        try:
            with open(run_path, "a", encoding="utf-8") as out:
                futures = [pool.submit(client.query, inst.prompt, inst.id) for inst in todo]
                for inst, fut in zip(todo, futures):
                    record = EvalRecord.from_reply(fut.result(), inst.label)
                    out.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")
                    out.flush()
                    done[inst.id] = record
        finally:
            # an interrupted run must not keep issuing queued requests
            pool.shutdown(wait=True, cancel_futures=True)
            if owns_client and isinstance(client, HttpChatClient):
                client.close()
    return [done[inst.id] for inst in dataset]
