"""Deterministic master/worker processor-array simulation.

A task table names one task per processing element (PE). PE0 is always
the master: it hands each worker its conversion assignment, streams the
host image out as row tiles, and collects converted tiles back. Workers
idle until their first message arrives. Everything runs on a
single-threaded cooperative scheduler that visits PEs round-robin in
index order; a task keeps the (simulated) processor until it sends,
blocks on a receive, yields, or finishes. Two runs with the same table,
image and tile size therefore produce byte-identical traces.

Mailboxes pass values only: payloads are copied on send, so no task can
reach another task's memory. Per-channel sequence numbers are gap-free
and ascending.

A cost ledger counts abstract operations per PE (multiplies, adds,
subtracts, compares, message words) with configurable unit weights and
reports pixels per compute-cycle, both compute-only and with the
message traffic included. The per-pixel operation counts are model
constants, not instrumentation: a matrix conversion costs 9 multiplies,
6 adds and 3 clamps per pixel (clamps are tallied with compares), the
complement conversion costs 3 subtracts. Control messages cost one
word; bulk messages cost ceil(bytes / 4) words; both endpoints of a
transfer are charged.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from .image import Image, UnsupportedInputError
from . import colorspace

__all__ = [
    "MalformedTableError",
    "RuntimeStateError",
    "WorkerFailureError",
    "TaskEntry",
    "TaskTable",
    "Message",
    "TraceEvent",
    "OpCounts",
    "CostWeights",
    "LedgerRow",
    "Runtime",
    "init_runtime",
    "register_task",
    "COST_PER_PIXEL",
    "DEFAULT_WEIGHTS",
]


class MalformedTableError(ValueError):
    """The task table violates the array's shape rules."""


class RuntimeStateError(RuntimeError):
    """An operation was invoked in the wrong runtime phase."""


class WorkerFailureError(RuntimeError):
    """One or more worker tasks signalled an error to the master."""

    def __init__(self, failures: dict[str, str]):
        super().__init__(f"worker failure: {failures}")
        self.failures = failures


# ---------------------------------------------------------------------------
# Task table
# ---------------------------------------------------------------------------

MASTER_TASK = "scatter-gather"


@dataclass(frozen=True)
class TaskEntry:
    pe: int
    task: str
    conversion: str | None = None
    path: str | None = None


@dataclass(frozen=True)
class TaskTable:
    """Ordered task list; entry order is start order and PE0 leads."""

    entries: tuple[TaskEntry, ...]

    def __post_init__(self):
        entries = tuple(self.entries)
        object.__setattr__(self, "entries", entries)
        if len(entries) < 2:
            raise MalformedTableError("need the master plus at least one worker")
        if entries[0].pe != 0:
            raise MalformedTableError("the first entry must target PE0")
        pes = [e.pe for e in entries]
        if len(set(pes)) != len(pes):
            raise MalformedTableError(f"duplicate PE entries in {pes}")
        if set(pes) != set(range(len(entries))):
            raise MalformedTableError(
                f"PE indices must be exactly 0..{len(entries) - 1}, got {sorted(pes)}"
            )
        for e in entries[1:]:
            if e.conversion not in colorspace.CONVERSIONS:
                raise MalformedTableError(
                    f"PE{e.pe}: unknown conversion {e.conversion!r}"
                )
            if e.path not in colorspace.CONVERT_PATHS:
                raise MalformedTableError(f"PE{e.pe}: unknown path {e.path!r}")

    @property
    def pe_count(self) -> int:
        return len(self.entries)

    @property
    def workers(self) -> tuple[TaskEntry, ...]:
        return self.entries[1:]

    @classmethod
    def default(cls) -> "TaskTable":
        """The stock 4-PE table: master plus ycc / yiq / cmy workers."""
        return cls((
            TaskEntry(0, MASTER_TASK),
            TaskEntry(1, "convert", "ycc", "real"),
            TaskEntry(2, "convert", "yiq", "real"),
            TaskEntry(3, "convert", "cmy", "real"),
        ))

    @classmethod
    def parse(cls, text: str) -> "TaskTable":
        """Parse the plain-text form: one ``pe task conversion path`` per line.

        Blank lines and ``#`` comments are skipped; commas count as
        whitespace; ``-`` marks an absent field on the master row.
        """
        entries = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].replace(",", " ").strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != 4:
                raise MalformedTableError(
                    f"line {lineno}: expected 'pe task conversion path', got {raw!r}"
                )
            pe_text, task, conversion, path = fields
            try:
                pe = int(pe_text)
            except ValueError:
                raise MalformedTableError(
                    f"line {lineno}: PE index {pe_text!r} is not an integer"
                ) from None
            entries.append(TaskEntry(
                pe, task,
                None if conversion == "-" else conversion,
                None if path == "-" else path,
            ))
        return cls(tuple(entries))

    @classmethod
    def load(cls, path) -> "TaskTable":
        with open(path, "r", encoding="ascii") as fh:
            return cls.parse(fh.read())

    def to_text(self) -> str:
        lines = ["# pe task conversion path"]
        for e in self.entries:
            lines.append(
                f"{e.pe} {e.task} {e.conversion or '-'} {e.path or '-'}"
            )
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Messages and trace events
# ---------------------------------------------------------------------------

BULK = "bulk"
CTL_START = "start"
CTL_DONE = "done"
CTL_RESULT = "result-summary"
CTL_ERROR = "error"


@dataclass(frozen=True)
class Message:
    """One mailbox item; ``seq`` counts messages on the (src, dst) channel."""

    src: int
    dst: int
    seq: int
    kind: str
    payload: object

    @property
    def words(self) -> int:
        if self.kind == BULK:
            return -(-self.payload.nbytes // 4)
        return 1


@dataclass(frozen=True)
class TraceEvent:
    """One scheduler step. Kinds: task-start, send, receive, yield, task-done."""

    ordinal: int
    kind: str
    pe: int
    peer: int | None = None
    seq: int | None = None

    def line(self) -> str:
        peer = "-" if self.peer is None else str(self.peer)
        seq = "-" if self.seq is None else str(self.seq)
        return f"{self.ordinal} {self.kind} {self.pe} {peer} {seq}"


# ---------------------------------------------------------------------------
# Cost model
# ---------------------------------------------------------------------------


@dataclass
class OpCounts:
    multiplies: int = 0
    adds: int = 0
    subtracts: int = 0
    compares: int = 0
    message_words: int = 0

    def scaled(self, n: int) -> "OpCounts":
        return OpCounts(
            self.multiplies * n, self.adds * n, self.subtracts * n,
            self.compares * n, self.message_words * n,
        )

    def add(self, other: "OpCounts") -> None:
        self.multiplies += other.multiplies
        self.adds += other.adds
        self.subtracts += other.subtracts
        self.compares += other.compares
        self.message_words += other.message_words


@dataclass(frozen=True)
class CostWeights:
    """Unit weights turning operation counts into compute-cycles."""

    multiply: int = 1
    add: int = 1
    subtract: int = 1
    compare: int = 1
    word: int = 1

    def compute_cycles(self, c: OpCounts) -> int:
        return (
            c.multiplies * self.multiply
            + c.adds * self.add
            + c.subtracts * self.subtract
            + c.compares * self.compare
        )


DEFAULT_WEIGHTS = CostWeights()

_MATRIX_COST = OpCounts(multiplies=9, adds=6, compares=3)  # clamps count as compares
COST_PER_PIXEL = {
    "ycc": _MATRIX_COST,
    "yiq": _MATRIX_COST,
    "yuv": _MATRIX_COST,
    "cmy": OpCounts(subtracts=3),
}


@dataclass(frozen=True)
class LedgerRow:
    conversion: str
    pe: int
    pixels: int
    compute_cycles: int
    message_words: int
    ppc_compute: float
    ppc_with_ipc: float


# ---------------------------------------------------------------------------
# Scheduler ops yielded by task generators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Send:
    dst: int
    kind: str
    payload: object


@dataclass(frozen=True)
class _Recv:
    src: int


@dataclass(frozen=True)
class _Yield:
    pass


@dataclass(frozen=True)
class _HostRecv:
    pass


def _tiles(pixels: np.ndarray, tile_rows: int):
    for r in range(0, pixels.shape[0], tile_rows):
        yield pixels[r : r + tile_rows]


def _master_task(rt: "Runtime", entry: TaskEntry):
    # Assignments first, so workers wake up knowing their conversion.
    for w in rt.table.workers:
        yield _Send(w.pe, CTL_START, {"conversion": w.conversion, "path": w.path})
    img_px = yield _HostRecv()
    for w in rt.table.workers:
        for tile in _tiles(img_px, rt.tile_rows):
            yield _Send(w.pe, BULK, tile)
        yield _Send(w.pe, CTL_DONE, {})
    results = {}
    for w in rt.table.workers:
        tiles = []
        failed = False
        while True:
            msg = yield _Recv(w.pe)
            if msg.kind == BULK:
                tiles.append(msg.payload)
            elif msg.kind == CTL_RESULT:
                break
            elif msg.kind == CTL_ERROR:
                failed = True
                break
            else:
                raise RuntimeStateError(f"unexpected {msg.kind} from PE{w.pe}")
        if not failed:
            results[w.conversion] = Image(np.concatenate(tiles, axis=0))
    rt._results = results


def _convert_task(rt: "Runtime", entry: TaskEntry):
    start = yield _Recv(0)
    if start.kind != CTL_START:
        raise RuntimeStateError(f"PE{entry.pe} expected a start control first")
    tiles = []
    while True:
        msg = yield _Recv(0)
        if msg.kind == CTL_DONE:
            break
        if msg.kind != BULK:
            raise RuntimeStateError(f"PE{entry.pe} got {msg.kind} mid-stream")
        tiles.append(msg.payload)
    img = Image(np.concatenate(tiles, axis=0))
    out = colorspace.convert_image(
        img, colorspace.get_matrix(entry.conversion), path=entry.path
    )
    npix = img.width * img.height
    rt._add_compute(entry.pe, entry.conversion, npix)
    yield _Yield()  # compute burst over; give the processor back
    for tile in _tiles(out.pixels, rt.tile_rows):
        yield _Send(0, BULK, tile)
    yield _Send(0, CTL_RESULT, {"conversion": entry.conversion, "pixels": npix})


_TASKS = {"convert": _convert_task}


def register_task(name: str, factory) -> None:
    """Register a worker task body: factory(runtime, entry) -> generator."""
    _TASKS[name] = factory


# ---------------------------------------------------------------------------
# Runtime
# ---------------------------------------------------------------------------

_NEW, _READY, _WAIT_MSG, _WAIT_HOST, _DONE = range(5)


class _PeState:
    __slots__ = ("gen", "state", "resume", "wait_src", "failed")

    def __init__(self, gen):
        self.gen = gen
        self.state = _NEW
        self.resume = None
        self.wait_src = None
        self.failed = None


class Runtime:
    """Handle for one scatter/convert/gather run over the array.

    Lifecycle: construct (or :func:`init_runtime`), ``scatter`` an RGB
    image, then either ``gather()`` for run-to-completion or call
    ``step()`` repeatedly to watch individual trace events. After a
    gather, ``ledger_report`` summarizes throughput.
    """

    def __init__(self, table: TaskTable, tile_rows: int = 16):
        if tile_rows < 1:
            raise ValueError("tile_rows must be positive")
        self.table = table
        self.tile_rows = tile_rows
        n = table.pe_count
        self._queues: dict[tuple[int, int], deque] = {}
        self._seq: dict[tuple[int, int], int] = {}
        self._ledger = [OpCounts() for _ in range(n)]
        self._pixels = [0] * n
        self._trace: list[TraceEvent] = []
        self._cursor = 0
        self._host_pending: np.ndarray | None = None
        self._phase = "init"
        self._results: dict[str, Image] = {}
        self._failures: dict[str, str] = {}
        self._conversion_of = {e.pe: e.conversion for e in table.workers}
        self.sent_log: list[tuple[str, int, int, int, int]] = []
        self.received_log: list[tuple[str, int, int, int, int]] = []

        self._pes = []
        for i, entry in enumerate(table.entries):
            if i == 0:
                gen = _master_task(self, entry)
            else:
                try:
                    factory = _TASKS[entry.task]
                except KeyError:
                    raise MalformedTableError(
                        f"PE{entry.pe}: unknown task {entry.task!r}"
                    ) from None
                gen = factory(self, entry)
            self._pes.append(_PeState(gen))

    # -- observability ------------------------------------------------------

    @property
    def pe_count(self) -> int:
        return self.table.pe_count

    @property
    def trace(self) -> tuple[TraceEvent, ...]:
        return tuple(self._trace)

    def trace_text(self) -> str:
        return "".join(ev.line() + "\n" for ev in self._trace)

    def dump_trace(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(self.trace_text())

    def op_counts(self, pe: int) -> OpCounts:
        return replace(self._ledger[pe])

    # -- host-side operations -----------------------------------------------

    def scatter(self, img: Image) -> None:
        """Hand the host image to the master for distribution."""
        if self._phase != "init":
            raise RuntimeStateError("an image was already scattered on this runtime")
        if img.channels != 3:
            raise UnsupportedInputError("the array converts RGB images")
        self._host_pending = img.pixels.copy()
        self._phase = "scattered"

    def gather(self) -> dict[str, Image]:
        """Run to completion and return {conversion: image}; results are consumed."""
        if self._phase == "init":
            raise RuntimeStateError("nothing scattered yet")
        if self._phase == "gathered":
            raise RuntimeStateError("results already consumed")
        while self.step() is not None:
            pass
        if not all(st.state == _DONE for st in self._pes):
            raise RuntimeStateError("array stalled before completion")
        self._phase = "gathered"
        if self._failures:
            raise WorkerFailureError(dict(self._failures))
        out = self._results
        self._results = {}
        return out

    def step(self) -> TraceEvent | None:
        """Advance one scheduler slice; None when nothing can run.

        Round-robin over PEs in index order, resuming from wherever the
        previous step stopped. A slice emits exactly one trace event; a
        task blocking on an empty mailbox emits nothing and the scan
        moves on.
        """
        n = self.pe_count
        for _ in range(n):
            pe = self._cursor
            self._cursor = (pe + 1) % n
            st = self._pes[pe]
            if st.state == _NEW:
                # The lead table entry starts unconditionally; everyone
                # else idles until a first message arrives.
                if pe == self.table.entries[0].pe or self._inbox_ready(pe):
                    st.state = _READY
                    return self._emit("task-start", pe)
                continue
            if st.state == _WAIT_MSG:
                q = self._queues.get((st.wait_src, pe))
                if q:
                    msg = q.popleft()
                    self._account_receive(pe, msg)
                    st.resume = msg
                    st.wait_src = None
                    st.state = _READY
                    return self._emit("receive", pe, peer=msg.src, seq=msg.seq)
                continue
            if st.state == _WAIT_HOST:
                if self._host_pending is None:
                    continue
                st.resume = self._host_pending
                self._host_pending = None
                st.state = _READY
                # silent hand-off from the host; run the slice now
            if st.state == _READY:
                event = self._run_slice(pe, st)
                if event is not None:
                    return event
                continue
            # _DONE: skip
        if all(st.state == _DONE for st in self._pes):
            return None
        if any(st.state == _WAIT_HOST for st in self._pes):
            return None  # parked until scatter() provides the image
        if any(st.state != _DONE for st in self._pes):
            raise RuntimeStateError("array deadlocked: tasks blocked with no input")
        return None

    def ledger_report(self, weights: CostWeights | None = None) -> list[LedgerRow]:
        """Per-conversion throughput (needs a completed gather)."""
        if self._phase != "gathered":
            raise RuntimeStateError("run incomplete; gather before reporting")
        w = weights if weights is not None else DEFAULT_WEIGHTS
        rows = []
        for entry in self.table.workers:
            counts = self._ledger[entry.pe]
            compute = w.compute_cycles(counts)
            words = counts.message_words
            pixels = self._pixels[entry.pe]
            ppc = pixels / compute if compute else 0.0
            ppc_ipc = pixels / (compute + words * w.word) if compute + words else 0.0
            rows.append(LedgerRow(
                conversion=entry.conversion, pe=entry.pe, pixels=pixels,
                compute_cycles=compute, message_words=words,
                ppc_compute=ppc, ppc_with_ipc=ppc_ipc,
            ))
        return rows

    # -- internals -----------------------------------------------------------

    def _inbox_ready(self, pe: int) -> bool:
        return any(
            self._queues.get((src, pe)) for src in range(self.pe_count)
        )

    def _emit(self, kind, pe, peer=None, seq=None) -> TraceEvent:
        ev = TraceEvent(len(self._trace), kind, pe, peer, seq)
        self._trace.append(ev)
        return ev

    def _post(self, src: int, dst: int, kind: str, payload) -> Message:
        if isinstance(payload, np.ndarray):
            payload = payload.copy()
        elif isinstance(payload, dict):
            payload = dict(payload)
        key = (src, dst)
        seq = self._seq.get(key, 0)
        self._seq[key] = seq + 1
        msg = Message(src, dst, seq, kind, payload)
        self._queues.setdefault(key, deque()).append(msg)
        self._ledger[src].message_words += msg.words
        self.sent_log.append((kind, src, dst, seq, msg.words))
        return msg

    def _account_receive(self, pe: int, msg: Message) -> None:
        self._ledger[pe].message_words += msg.words
        self.received_log.append((msg.kind, msg.src, msg.dst, msg.seq, msg.words))

    def _add_compute(self, pe: int, conversion: str, pixels: int) -> None:
        self._ledger[pe].add(COST_PER_PIXEL[conversion].scaled(pixels))
        self._pixels[pe] += pixels

    def _run_slice(self, pe: int, st: _PeState) -> TraceEvent | None:
        while True:
            value, st.resume = st.resume, None
            try:
                op = st.gen.send(value)
            except StopIteration:
                st.state = _DONE
                return self._emit("task-done", pe)
            except Exception as exc:
                if pe == self.table.entries[0].pe:
                    raise  # a master failure is an artifact bug, not a protocol event
                st.state = _DONE
                st.failed = str(exc)
                name = self._conversion_of.get(pe) or f"pe{pe}"
                self._failures[name] = str(exc)
                self._post(pe, 0, CTL_ERROR, {"error": str(exc)})
                return self._emit("task-done", pe)
            if isinstance(op, _Send):
                msg = self._post(pe, op.dst, op.kind, op.payload)
                return self._emit("send", pe, peer=op.dst, seq=msg.seq)
            if isinstance(op, _Recv):
                q = self._queues.get((op.src, pe))
                if q:
                    msg = q.popleft()
                    self._account_receive(pe, msg)
                    st.resume = msg
                    return self._emit("receive", pe, peer=msg.src, seq=msg.seq)
                st.state = _WAIT_MSG
                st.wait_src = op.src
                return None
            if isinstance(op, _Yield):
                return self._emit("yield", pe)
            if isinstance(op, _HostRecv):
                if pe != self.table.entries[0].pe:
                    raise RuntimeStateError("only the master talks to the host")
                if self._host_pending is not None:
                    st.resume = self._host_pending
                    self._host_pending = None
                    continue
                st.state = _WAIT_HOST
                return None
            raise RuntimeStateError(f"PE{pe} yielded unknown op {op!r}")


def init_runtime(table: TaskTable, tile_rows: int = 16) -> Runtime:
    """Build a runtime for the table; PE0's task is first in line to run."""
    return Runtime(table, tile_rows)
