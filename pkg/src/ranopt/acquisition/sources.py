"""Stream bindings: newline-delimited CSV over TCP, and a watched directory.

Socket wire format: first line is a header whose leading columns are
source_tag and seq_no, remaining columns one of the known payload schemas;
every following line is one record.
"""
from __future__ import annotations

import socketserver
import threading
import time
from pathlib import Path

from ..errors import FileRejected
from .pipeline import (AcquisitionPipeline, KPI_HEADER, MEASUREMENT_HEADER,
                       MEASUREMENT_HEADER_KBPS)
from .records import RawRecord, RejectCode, RejectReason


class _StreamHandler(socketserver.StreamRequestHandler):
    def handle(self):
        pipeline: AcquisitionPipeline = self.server.pipeline  # type: ignore
        header_line = self.rfile.readline().decode().rstrip("\r\n")
        header = tuple(header_line.split(","))
        if header[:2] != ("source_tag", "seq_no") or header[2:] not in (
                MEASUREMENT_HEADER, MEASUREMENT_HEADER_KBPS, KPI_HEADER):
            self.wfile.write(b"rejected bad-header\n")
            return
        payload_header = header[2:]
        for raw_line in self.rfile:
            line = raw_line.decode().rstrip("\r\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(header):
                self.wfile.write(b"rejected bad-line\n")
                continue
            try:
                seq = int(parts[1])
            except ValueError:
                self.wfile.write(b"rejected bad-seq\n")
                continue
            ack = pipeline.ingest_stream(
                RawRecord(parts[0], seq, dict(zip(payload_header, parts[2:]))))
            self.wfile.write(ack.encode() + b"\n")


class StreamServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address: tuple[str, int], pipeline: AcquisitionPipeline):
        super().__init__(address, _StreamHandler)
        self.pipeline = pipeline

    def serve_in_background(self) -> threading.Thread:
        t = threading.Thread(target=self.serve_forever, daemon=True)
        t.start()
        return t


def watch_directory(directory, pipeline: AcquisitionPipeline,
                    poll_s: float = 0.2, stop_event: threading.Event | None = None,
                    max_batches: int | None = None) -> int:
    """Poll a directory for new CSV/TXT files and ingest them once each."""
    seen: set[str] = set()
    processed = 0
    directory = Path(directory)
    while True:
        for path in sorted(directory.glob("*")):
            if path.suffix.lower() not in (".csv", ".txt") or path.name in seen:
                continue
            seen.add(path.name)
            try:
                pipeline.ingest_batch(path)
            except FileRejected:
                pipeline.rejects.append((
                    RawRecord("drive-test", -1, {}),
                    RejectReason(RejectCode.UNPARSABLE_VALUE, None, str(path))))
            processed += 1
            if max_batches is not None and processed >= max_batches:
                return processed
        if stop_event is not None and stop_event.is_set():
            return processed
        if max_batches is None and stop_event is None:
            return processed
        time.sleep(poll_s)
