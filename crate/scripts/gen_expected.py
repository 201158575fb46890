#!/usr/bin/env python3
"""Regenerate corpus/<group>/<name>.expected (and .err) with reference Lua 5.2.

Uses the Lua 5.2 runtime bundled with lupa (pip install lupa). Each program
is loaded with chunk name "=input", so positions read "input:LINE:", and
run with print redirected into a buffer.

A case whose uncaught error message depends on the reference interpreter's
variable-name diagnostics can pin the checked part with a first line of the
form `-- err: <substring>`.
"""
import argparse
import pathlib
import sys

from lupa import lua52

RUNNER = rb"""
return function(src)
  local out = {}
  print = function(...)
    local n = select('#', ...)
    local parts = {}
    for i = 1, n do parts[i] = tostring((select(i, ...))) end
    out[#out + 1] = table.concat(parts, '\t') .. '\n'
  end
  local f, err = load(src, '=input')
  if not f then return table.concat(out), 'parse', err end
  local ok, e = pcall(f)
  if ok then return table.concat(out), 'ok', nil end
  local t = type(e)
  if t == 'string' or t == 'number' then e = tostring(e)
  else e = '(error object is a ' .. t .. ' value)' end
  return table.concat(out), 'error', e
end
"""


def run(source: bytes):
    rt = lua52.LuaRuntime(encoding=None)
    out, status, err = rt.execute(RUNNER)(source)
    return out, status.decode(), err


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("corpus", type=pathlib.Path, nargs="?", default=pathlib.Path("corpus"))
    ap.add_argument("--check", action="store_true", help="compare instead of writing")
    args = ap.parse_args()
    stale = 0
    for src in sorted(args.corpus.glob("*/*.lua")):
        text = src.read_bytes()
        out, status, err = run(text)
        if status == "parse":
            print(f"{src}: reference rejects the program: {err.decode(errors='replace')}", file=sys.stderr)
            return 1
        files = {src.with_suffix(".expected"): out}
        err_path = src.with_suffix(".err")
        if status == "error":
            first = text.split(b"\n", 1)[0]
            if first.startswith(b"-- err: "):
                pinned = first[len(b"-- err: "):].strip()
                if pinned not in err:
                    print(f"{src}: {pinned!r} not in reference error {err!r}", file=sys.stderr)
                    return 1
                err = pinned
            files[err_path] = err + b"\n"
        for path, data in files.items():
            if args.check:
                if not path.exists() or path.read_bytes() != data:
                    print(f"stale: {path}")
                    stale += 1
            else:
                path.write_bytes(data)
        if status == "ok" and err_path.exists():
            if args.check:
                print(f"stale: {err_path}")
                stale += 1
            else:
                err_path.unlink()
    return 1 if stale else 0


if __name__ == "__main__":
    sys.exit(main())
