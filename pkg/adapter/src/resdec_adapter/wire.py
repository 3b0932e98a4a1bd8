"""Line framing for the stdio step protocol: requests in, replies out.

Requests are single JSON-object lines:
    {"cmd":"reset","prompt":[int,...]} | {"cmd":"step","feed":int} | {"cmd":"close"}
Replies are single JSON-object lines:
    {"topk":[[id,logprob],...],"eos":bool,"vocab":int}  or  {"error":str}
"""

from __future__ import annotations

import json

from resdec_adapter.errors import ProtocolError
from resdec_adapter.model import TopSlice

_COMPACT = (",", ":")


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def parse_request(line: str) -> dict:
    """Parse one request line into a validated {"cmd": ...} dict."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"invalid JSON: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise ProtocolError("request must be a JSON object")
    cmd = obj.get("cmd")
    if cmd == "reset":
        prompt = obj.get("prompt")
        if not isinstance(prompt, list) or not prompt:
            raise ProtocolError("reset needs a non-empty 'prompt' list")
        if not all(_is_int(t) for t in prompt):
            raise ProtocolError("prompt tokens must be integers")
        return {"cmd": "reset", "prompt": [int(t) for t in prompt]}
    if cmd == "step":
        feed = obj.get("feed")
        if not _is_int(feed):
            raise ProtocolError("step needs an integer 'feed' token")
        return {"cmd": "step", "feed": int(feed)}
    if cmd == "close":
        return {"cmd": "close"}
    raise ProtocolError(f"unknown cmd {cmd!r}")


def encode_topk_reply(sl: TopSlice) -> str:
    """Encode one kept distribution as a reply line."""
    pairs = [[int(i), float(v)] for i, v in zip(sl.token_ids, sl.logprobs)]
    return json.dumps(
        {"topk": pairs, "eos": bool(sl.eos), "vocab": int(sl.vocab_size)},
        separators=_COMPACT,
        ensure_ascii=False,
    )


def encode_error(message: str) -> str:
    """Encode an error reply line."""
    return json.dumps({"error": str(message)}, separators=_COMPACT, ensure_ascii=False)
