"""Stdio server: one model session per process, one reply line per request line.

Malformed or out-of-order requests get an {"error": ...} reply and the loop
keeps going, so a misbehaving peer can never crash the process. A failure of
the backing model itself propagates to the caller, which exits nonzero.
"""

from __future__ import annotations

import sys

from resdec_adapter.config import AdapterConfig
from resdec_adapter.errors import ProtocolError, SessionError
from resdec_adapter.model import ModelSession, load_model
from resdec_adapter.wire import encode_error, encode_topk_reply, parse_request


def serve(config: AdapterConfig, stdin=None, stdout=None) -> int:
    """Answer step-protocol requests line by line until 'close' or EOF.

    Returns the process exit code (0 on an orderly close or EOF).
    """
    fin = sys.stdin if stdin is None else stdin
    fout = sys.stdout if stdout is None else stdout
    model = load_model(config)
    session = ModelSession(
        model, top_m=config.top_m, max_context=config.max_context, device=config.device
    )
    for raw in fin:
        try:
            request = parse_request(raw.strip())
            if request["cmd"] == "close":
                return 0
            if request["cmd"] == "reset":
                reply = encode_topk_reply(session.reset(request["prompt"])[-1])
            else:
                reply = encode_topk_reply(session.step(request["feed"]))
        except (ProtocolError, SessionError) as exc:
            reply = encode_error(str(exc))
        print(reply, file=fout, flush=True)
    return 0
