"""Command-line interface: ``asympolar <subcommand> [options]``.

Options may also come from a ``key = value`` file given with ``--config``;
flags on the command line take precedence.  ``ASYMPOLAR_SEED`` and
``ASYMPOLAR_WORKERS`` override the seed and worker count.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .channel import DECODERS, StopRule, run_fer
from .complexity import count_fast_ssc_ops, count_sc_ops, memory_footprint, verify_appendix_inequality
from .construction import construct_code, factor_23, format_profile, kernel_orders
from .core import CodeError, CodeScheme
from .crc import crc16_batch
from .decoder import fast_ssc_decode, sc_decode, scl_decode
from .encoder import encode, generator_matrix, receive, transmit

SCHEMES = ("apc", "shortened", "punctured", "mk", "arikan")
EXIT_DOMAIN, EXIT_VERIFY = 1, 2


class VerificationError(Exception):
    pass


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage problems exit with 1 so that 2 stays reserved for verification failures
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# -- argument parsing ----------------------------------------------------------

def _int_list(text: str) -> List[int]:
    return [int(v) for v in text.replace(" ", "").split(",") if v]


def _float_list(text: str) -> List[float]:
    """Comma list, or ``start:stop:step`` (inclusive stop)."""
    text = text.replace(" ", "")
    if ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        count = int(round((stop - start) / step)) + 1
        return [round(start + i * step, 10) for i in range(count)]
    return [float(v) for v in text.split(",") if v]


def _code_options(p: argparse.ArgumentParser, k_required: bool = True) -> None:
    p.add_argument("--scheme", choices=SCHEMES, default="apc")
    p.add_argument("--n", type=int, required=True, help="code length N")
    p.add_argument("--k", type=int, required=k_required, help="information bits, CRC included")
    p.add_argument("--asc", dest="ascending", action="store_true", default=True,
                       help="ascending partial-code permutation (default)")
    p.add_argument("--desc", dest="ascending", action="store_false",
                       help="descending partial-code permutation (the last of --asc/--desc wins)")
    p.add_argument("--design-snr", type=float, default=2.0, help="GA design Eb/N0 in dB")
    p.add_argument("--crc-width", type=int, choices=(0, 16), default=0)


def _output_options(p: argparse.ArgumentParser, formats: Sequence[str]) -> None:
    p.add_argument("--output", "-o", help="write to this file instead of stdout")
    p.add_argument("--format", choices=formats, default=formats[0])


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="asympolar", description="Asymmetric polar code toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="key = value file supplying default options")
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")

    p = sub.add_parser("construct", help="GA code design: reliability ranking and frozen set")
    _code_options(p)
    _output_options(p, ("text", "json"))

    p = sub.add_parser("encode", help="encode information bits into a transmitted codeword")
    _code_options(p)
    p.add_argument("--bits", required=True, help="payload bits, e.g. 1011 (CRC is appended)")
    p.add_argument("--dump-matrix", action="store_true", help="also print the generator matrix")
    _output_options(p, ("text",))

    p = sub.add_parser("decode", help="decode channel LLRs")
    _code_options(p)
    p.add_argument("--llrs", help="comma-separated LLRs of one received frame")
    p.add_argument("--input", help="file with one frame of LLRs per line")
    p.add_argument("--decoder", choices=DECODERS, default="sc")
    p.add_argument("--list-size", type=int, default=8)
    _output_options(p, ("text",))

    p = sub.add_parser("simulate", help="Monte Carlo FER over an Eb/N0 grid")
    _code_options(p)
    p.add_argument("--ebno", type=_float_list, required=True, help="comma list or start:stop:step in dB")
    p.add_argument("--decoder", choices=DECODERS, default="scl")
    p.add_argument("--list-size", type=int, default=8)
    p.add_argument("--max-errors", type=int, default=100)
    p.add_argument("--max-frames", type=int, default=10_000_000)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--manifest", help="path of the JSON run manifest")
    _output_options(p, ("csv",))

    p = sub.add_parser("count-ops", help="SC / Fast-SSC operation counts and memory words")
    p.add_argument("--n", type=_int_list, required=True, help="comma list of code lengths")
    p.add_argument("--scheme", choices=SCHEMES, default="apc")
    p.add_argument("--all", action="store_true", help="APC, shortened PS and MK rows for every N")
    p.add_argument("--rate", type=float, default=0.5, help="K = round(rate * N) for Fast-SSC counts")
    p.add_argument("--asc", dest="ascending", action="store_true", default=True)
    p.add_argument("--desc", dest="ascending", action="store_false")
    p.add_argument("--design-snr", type=float, default=2.0)
    _output_options(p, ("csv", "json"))

    p = sub.add_parser("verify-bounds", help="check APC SC ops < mother-code ops for every N")
    p.add_argument("--max-n", type=int, default=8192)
    _output_options(p, ("text",))

    p = sub.add_parser("dump-matrix", help="print the native generator matrix")
    _code_options(p, k_required=False)
    _output_options(p, ("text",))
    return parser


def read_config(path: str) -> Dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values: Dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise CodeError(f"{path}:{lineno}: expected 'key = value'")
            values[key.strip().replace("_", "-")] = value.strip()
    return values


_TRUE = {"1", "true", "yes", "on"}


def _config_tokens(sub: argparse.ArgumentParser, config: Dict[str, str]) -> List[str]:
    flags = {}
    for action in sub._actions:
        for opt in action.option_strings:
            if opt.startswith("--"):
                flags[opt[2:]] = action
    tokens: List[str] = []
    for key, value in config.items():
        if key == "permutation":
            if value not in ("asc", "desc"):
                raise CodeError(f"permutation must be asc or desc, not {value!r}")
            tokens.append("--" + value)
            continue
        action = flags.get(key)
        if action is None:
            raise CodeError(f"unknown config key {key!r}")
        if action.nargs == 0:
            if value.lower() in _TRUE:
                tokens.append("--" + key)
        else:
            tokens.extend(["--" + key, value])
    return tokens


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    pre = _Parser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if not known.config:
        args = parser.parse_args(argv)
    else:
        config = read_config(known.config)
        subparsers = parser._subparsers._group_actions[0].choices
        command = next((tok for tok in rest if tok in subparsers), None)
        if command is None:
            command = config.get("subcommand")
            if command not in subparsers:
                parser.error("no subcommand given on the command line or in the config file")
            rest = [command] + rest
        config.pop("subcommand", None)
        position = rest.index(command)
        tokens = _config_tokens(subparsers[command], config)
        args = parser.parse_args(rest[:position + 1] + tokens + rest[position + 1:])
    if args.subcommand is None:
        parser.error("a subcommand is required")
    if args.subcommand == "simulate":
        if "ASYMPOLAR_SEED" in os.environ:
            args.seed = int(os.environ["ASYMPOLAR_SEED"])
        if "ASYMPOLAR_WORKERS" in os.environ:
            args.workers = int(os.environ["ASYMPOLAR_WORKERS"])
    return args


# -- subcommands ---------------------------------------------------------------

def _spec(args, k: Optional[int] = None, design_snr: Optional[float] = None):
    k = args.k if k is None else k
    snr = args.design_snr if design_snr is None else design_snr
    return construct_code(args.scheme, args.n, k, snr, ascending=args.ascending,
                          crc_width=args.crc_width)


def _bits_text(bits) -> str:
    return "".join(str(int(b)) for b in np.asarray(bits).reshape(-1))


def cmd_construct(args) -> str:
    spec = _spec(args)
    if args.format == "text":
        return format_profile(spec)
    info = set(spec.info_set)
    doc = {
        "N": spec.n_total, "K": spec.k_info, "scheme": spec.scheme.label,
        "design_snr_db": spec.design_snr_db, "crc_width": spec.crc_width,
        "ranking": [int(i) for i in spec.profile.ranking],
        "info_set": list(spec.info_set),
        "frozen_set": [int(i) for i in spec.profile.ranking if i not in info],
        "means": [float(m) for m in spec.profile.means],
    }
    if spec.scheme.is_rate_matched:
        doc["pattern"] = list(spec.scheme.pattern)
    return json.dumps(doc, indent=2) + "\n"


def _matrix_text(matrix) -> str:
    return "".join(_bits_text(row) + "\n" for row in matrix)


def cmd_encode(args) -> str:
    spec = _spec(args)
    payload = np.array([int(c) for c in args.bits.strip()], dtype=np.uint8)
    if any(c not in "01" for c in args.bits.strip()):
        raise CodeError("--bits must contain only 0 and 1")
    if payload.size != spec.payload_bits:
        raise CodeError(f"expected {spec.payload_bits} payload bits, got {payload.size}")
    payload_pos, crc_pos = spec.info_positions()
    u = np.zeros(spec.n_native, dtype=np.uint8)
    u[payload_pos] = payload
    if spec.crc_width:
        u[crc_pos] = crc16_batch(payload[None, :])[0]
    x = transmit(encode(u, spec), spec)
    out = ""
    if args.dump_matrix:
        out += _matrix_text(generator_matrix(spec))
    return out + _bits_text(x) + "\n"


def _read_frames(args) -> np.ndarray:
    if args.llrs and args.input:
        raise CodeError("give either --llrs or --input, not both")
    if args.llrs:
        lines = [args.llrs]
    elif args.input:
        with open(args.input, encoding="utf-8") as fh:
            lines = [ln for ln in fh if ln.strip()]
    else:
        raise CodeError("decode needs --llrs or --input")
    return np.array([[float(v) for v in ln.replace(",", " ").split()] for ln in lines])


def cmd_decode(args) -> str:
    spec = _spec(args)
    frames = _read_frames(args)
    if frames.shape[1] != spec.n_total:
        raise CodeError(f"expected {spec.n_total} LLRs per frame, got {frames.shape[1]}")
    llrs = receive(frames, spec)
    if args.decoder == "sc":
        u_hat = sc_decode(llrs, spec)[0]
    elif args.decoder == "fast-ssc":
        u_hat = fast_ssc_decode(llrs, spec)[0]
    else:
        u_hat = scl_decode(llrs, spec, list_size=args.list_size)
    payload_pos, _ = spec.info_positions()
    return "".join(_bits_text(row[payload_pos]) + "\n" for row in u_hat)


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha1(blob).hexdigest()[:12]


def cmd_simulate(args):
    if args.k is None:
        raise CodeError("simulate needs --k")
    stop = StopRule(args.max_errors, args.max_frames)
    points = run_fer(args.scheme, args.n, args.k, args.ebno, args.decoder, args.list_size, stop,
                     args.seed, args.workers, args.crc_width, args.ascending, args.batch_size)
    label = args.scheme if args.scheme != "apc" else ("apc-asc" if args.ascending else "apc-desc")
    lines = ["scheme,N,K,ebno_db,frames,errors,fer"]
    for p in points:
        lines.append(f"{label},{args.n},{args.k},{p.ebno_db:g},{p.frames},{p.errors},{p.fer:.6g}")
    run = {
        "scheme": label, "N": args.n, "K": args.k, "crc_width": args.crc_width,
        "ebno_db": list(args.ebno), "decoder": args.decoder,
        "list_size": args.list_size if args.decoder == "scl" else None,
        "seed": args.seed, "workers": args.workers,
        "stop_rule": {"max_errors": stop.max_errors, "max_frames": stop.max_frames},
        "batch_size": args.batch_size, "rng": "numpy PCG64, ziggurat normals",
        "version": __version__,
    }
    run["config_hash"] = config_hash(run)
    return "\n".join(lines) + "\n", json.dumps(run, indent=2, sort_keys=True) + "\n"


def _count_row(scheme: str, n: int, args) -> Optional[dict]:
    k = int(round(args.rate * n))
    if scheme == "mk":
        try:
            factor_23(n)
        except CodeError:
            return None
    spec = construct_code(scheme, n, k, args.design_snr, ascending=args.ascending)
    alpha, beta = memory_footprint(spec)
    label = spec.scheme.label if scheme != "mk" else "mk"
    return {"scheme": label, "N": n, "K": k, "sc_ops": count_sc_ops(spec),
            "fast_ssc_ops": count_fast_ssc_ops(spec), "alpha_words": alpha, "beta_words": beta}


def cmd_count_ops(args) -> str:
    schemes = ("apc", "shortened", "mk") if args.all else (args.scheme,)
    rows = []
    for scheme in schemes:
        for n in args.n:
            row = _count_row(scheme, n, args)
            if row is None:
                print(f"asympolar: N={n} has no 2^n 3^m factorization; skipping mk", file=sys.stderr)
                continue
            rows.append(row)
    if args.format == "json":
        return json.dumps(rows, indent=2) + "\n"
    keys = ("scheme", "N", "K", "sc_ops", "fast_ssc_ops", "alpha_words", "beta_words")
    return ",".join(keys) + "\n" + "".join(",".join(str(r[key]) for key in keys) + "\n" for r in rows)


def cmd_verify_bounds(args) -> str:
    report = verify_appendix_inequality(args.max_n)
    text = "\n".join(report.lines()) + "\n"
    if not report.ok:
        raise VerificationError(text)
    return text


def cmd_dump_matrix(args) -> str:
    """Native generator matrix; with ``--k`` the designed code's own (e.g. searched MK order)."""
    if args.k is not None:
        return _matrix_text(generator_matrix(_spec(args)))
    if args.scheme == "apc":
        scheme = CodeScheme.asymmetric(args.ascending)
    elif args.scheme == "mk":
        scheme = CodeScheme.multikernel(next(kernel_orders(args.n)))
    else:
        scheme = CodeScheme(args.scheme)
    return _matrix_text(generator_matrix(scheme, args.n))


COMMANDS = {
    "construct": cmd_construct, "encode": cmd_encode, "decode": cmd_decode,
    "simulate": cmd_simulate, "count-ops": cmd_count_ops, "verify-bounds": cmd_verify_bounds,
    "dump-matrix": cmd_dump_matrix,
}


def _emit(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = parse_args(argv)
        result = COMMANDS[args.subcommand](args)
        if args.subcommand == "simulate":
            table, manifest = result
            _emit(table, args.output)
            if args.manifest:
                _emit(manifest, args.manifest)
            elif args.output:
                _emit(manifest, args.output + ".json")
            else:
                sys.stderr.write(manifest)
        else:
            _emit(result, args.output)
    except VerificationError as exc:
        sys.stdout.write(str(exc))
        return EXIT_VERIFY
    except UsageError as exc:
        print(f"asympolar: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (CodeError, OSError) as exc:
        print(f"asympolar: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return 0


if __name__ == "__main__":
    sys.exit(main())
