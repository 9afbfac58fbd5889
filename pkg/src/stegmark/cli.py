"""Command-line interface.

Every command prints a ``key=value`` report whose first line is
``status=OK|TAMPERED|ERROR``.  Exit codes: 0 success, 1 verification failed,
2 usage error, 3 capacity error, 4 format or parse error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import container, harness, hsrdh, kmeanswm, lsbstego, lzwcodec, metrics, pvdstego, roiwm, svdwm
from .container import CapacityError, FrameError
from .imagecore import ImageFormatError, Region, load_image, save_image
from .keystream import StegoKey

log = logging.getLogger("stegmark")

EXIT_OK = 0
EXIT_TAMPERED = 1
EXIT_USAGE = 2
EXIT_CAPACITY = 3
EXIT_FORMAT = 4

SCHEMES = ("lsb", "pvd", "hsrdh", "svdwm", "kmeans", "roiwm", "selfhash")


class UsageError(Exception):
    pass


class Outcome:
    def __init__(self, status="OK", exit_code=EXIT_OK):
        self.status = status
        self.exit_code = exit_code
        self.lines = []

    def add(self, **items):
        for k, v in items.items():
            self.lines.append(f"{k}={v}")
        return self

    def emit(self, stream):
        print(f"status={self.status}", file=stream)
        for line in self.lines:
            print(line, file=stream)
        return self.exit_code


def _hexkey(text):
    try:
        return StegoKey.from_hex(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _region(text):
    try:
        return Region.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _need(args, *names):
    for n in names:
        if getattr(args, n, None) is None:
            raise UsageError(f"--{n.replace('_', '-')} is required for scheme {args.scheme}")


def _payload(args) -> bytes:
    if args.payload is not None:
        return Path(args.payload).read_bytes()
    if args.message is not None:
        return args.message.encode("utf-8")
    raise UsageError("embedding needs --payload FILE or --message TEXT")


def _lsb_cfg(args):
    channels = lsbstego.LsbConfig.parse_channels(args.channels) if args.channels else None
    if args.order == "perm":
        _need(args, "key")
    return lsbstego.LsbConfig(args.bits, channels, args.order, args.key)


def _roi_spec(args, img):
    _need(args, "roi", "key")
    return roiwm.RoiWatermarkSpec(args.roi, args.key, tuple(args.roni or ())).resolved(img)


def _psnr_text(a, b):
    p = metrics.psnr(a, b)
    return p if p == metrics.IDENTICAL else f"{p:.4f}"


def _sidecar_path(args):
    return Path(args.sidecar) if args.sidecar else Path(str(args.out) + ".hsrdh")


# --------------------------------------------------------------------------


def cmd_embed(args) -> Outcome:
    _need(args, "out")
    img = load_image(args.inp)
    out = Outcome()
    s = args.scheme
    if s == "lsb":
        cfg = _lsb_cfg(args)
        data = _payload(args)
        stego = lsbstego.lsb_embed(img, data, cfg)
        out.add(capacity_bits=lsbstego.lsb_capacity(img, cfg), used_bits=container.frame_bits_needed(len(data)))
    elif s == "pvd":
        _need(args, "key")
        table = pvdstego.RangeTable.parse(args.range_table)
        data = _payload(args)
        stego = pvdstego.pvd_embed(img, data, table, args.key)
        out.add(capacity_bits=pvdstego.pvd_capacity(img, table, args.key), used_bits=container.frame_bits_needed(len(data)))
    elif s == "hsrdh":
        data = _payload(args)
        stego, rec = hsrdh.hsrdh_embed(img, data, args.rounds)
        side = _sidecar_path(args)
        side.write_bytes(rec.to_bytes())
        out.add(
            capacity_bits_round1=hsrdh.hsrdh_capacity(img),
            used_bits=container.frame_bits_needed(len(data)),
            peaks=f"{rec.pp1},{rec.pp2}",
            rounds=rec.rounds,
            sidecar=side,
        )
    elif s == "svdwm":
        _need(args, "key1", "key2")
        stego = svdwm.svdwm_embed(img, args.key1, args.key2)
        out.add(blocks=(img.width // 8) * (img.height // 8), unprotected=len(svdwm.unprotected_regions(img)))
    elif s == "kmeans":
        _need(args, "watermark", "seed")
        wm = load_image(args.watermark)
        stego = kmeanswm.kmwm_embed(img, wm, args.seed)
        out.add(used_bits=img.width * img.height)
    elif s == "roiwm":
        spec = _roi_spec(args, img)
        stego = roiwm.roiwm_embed(img, spec)
        out.add(capacity_bits=roiwm.roni_capacity(img, spec), roi=spec.roi, roni=";".join(map(str, spec.roni)))
    elif s == "selfhash":
        _need(args, "key")
        stego = roiwm.selfhash_tag(img, args.key)
        out.add(used_bits=roiwm.SELFHASH_BITS)
    else:
        raise UsageError(f"unknown scheme {s}")
    save_image(stego, args.out)
    out.add(psnr_db=_psnr_text(img, stego), out=args.out)
    return out


def cmd_extract(args) -> Outcome:
    _need(args, "out")
    img = load_image(args.inp)
    out = Outcome()
    s = args.scheme
    if s == "lsb":
        data = lsbstego.lsb_extract(img, _lsb_cfg(args))
    elif s == "pvd":
        _need(args, "key")
        data = pvdstego.pvd_extract(img, pvdstego.RangeTable.parse(args.range_table), args.key)
    elif s == "hsrdh":
        side = Path(args.sidecar) if args.sidecar else Path(str(args.inp) + ".hsrdh")
        rec = hsrdh.RecoveryRecord.from_bytes(side.read_bytes())
        data, cover = hsrdh.hsrdh_extract(img, rec)
        if args.restored:
            save_image(cover, args.restored)
            out.add(restored=args.restored)
    elif s == "roiwm":
        spec = _roi_spec(args, img)
        _, recovered = roiwm.roiwm_verify(img, spec)
        save_image(recovered, args.out)
        return out.add(recovered_roi=args.out)
    else:
        raise UsageError(f"scheme {s} carries no extractable payload")
    Path(args.out).write_bytes(data)
    return out.add(payload_bytes=len(data), out=args.out)


def _write_map(args, tmap, height, width, out):
    if args.map:
        save_image(tmap.to_image(height, width), args.map)
        out.add(map=args.map)


def cmd_verify(args) -> Outcome:
    img = load_image(args.inp)
    s = args.scheme
    if s == "svdwm":
        _need(args, "key1", "key2")
        tmap = svdwm.svdwm_verify(img, args.key1, args.key2)
        out = Outcome("TAMPERED", EXIT_TAMPERED) if tmap.any() else Outcome()
        out.lines.extend(svdwm.format_report(img, tmap))
        _write_map(args, tmap, img.height, img.width, out)
        return out
    if s == "kmeans":
        _need(args, "watermark", "seed")
        res = kmeanswm.kmwm_verify(img, load_image(args.watermark), args.seed)
        out = Outcome("TAMPERED", EXIT_TAMPERED) if res.tamper.any() else Outcome()
        out.add(flagged=res.tamper.count, fraction=f"{res.fraction:.6f}",
                blocks_flagged=int((res.block_fraction > 0).sum()))
        _write_map(args, res.tamper, img.height, img.width, out)
        return out
    if s == "roiwm":
        spec = _roi_spec(args, img)
        tmap, recovered = roiwm.roiwm_verify(img, spec)
        out = Outcome("TAMPERED", EXIT_TAMPERED) if tmap.any() else Outcome()
        out.add(roi=spec.roi, flagged=tmap.count)
        _write_map(args, tmap, spec.roi.h, spec.roi.w, out)
        if args.recovered:
            save_image(recovered, args.recovered)
            out.add(recovered=args.recovered)
        return out
    if s == "selfhash":
        _need(args, "key")
        verdict = roiwm.selfhash_check(img, args.key)
        if verdict is roiwm.Verdict.NO_TAG:
            return Outcome("ERROR", EXIT_FORMAT).add(verdict=verdict.value, error="no frame found")
        out = Outcome() if verdict is roiwm.Verdict.AUTHENTIC else Outcome("TAMPERED", EXIT_TAMPERED)
        return out.add(verdict=verdict.value)
    if s in ("lsb", "pvd"):
        try:
            if s == "lsb":
                data = lsbstego.lsb_extract(img, _lsb_cfg(args))
            else:
                _need(args, "key")
                data = pvdstego.pvd_extract(img, pvdstego.RangeTable.parse(args.range_table), args.key)
        except container.CorruptPayloadError:
            return Outcome("TAMPERED", EXIT_TAMPERED).add(error="payload corrupted")
        return Outcome().add(payload_bytes=len(data))
    raise UsageError(f"scheme {s} has no verify mode")


def cmd_metrics(args) -> Outcome:
    a = load_image(args.a)
    b = load_image(args.b)
    p = metrics.SsimParams.literal(args.window) if args.literal_constants else metrics.SsimParams(window=args.window)
    rep = metrics.quality_report(a, b, p)
    out = Outcome()
    out.lines.append(rep.to_line())
    return out


def cmd_capacity(args) -> Outcome:
    img = load_image(args.inp)
    s = args.scheme
    out = Outcome()
    if s == "lsb":
        bits = lsbstego.lsb_capacity(img, _lsb_cfg(args))
    elif s == "pvd":
        _need(args, "key")
        bits = pvdstego.pvd_capacity(img, pvdstego.RangeTable.parse(args.range_table), args.key)
    elif s == "hsrdh":
        bits = hsrdh.hsrdh_capacity(img)
    elif s == "roiwm":
        bits = roiwm.roni_capacity(img, _roi_spec(args, img))
    elif s == "svdwm":
        bits = (img.width // 8) * (img.height // 8) * 64
    elif s == "kmeans":
        bits = img.width * img.height
    elif s == "selfhash":
        bits = roiwm.SELFHASH_BITS if img.samples.size >= roiwm.SELFHASH_BITS else 0
    else:
        raise UsageError(f"unknown scheme {s}")
    out.add(capacity_bits=bits)
    if s in ("lsb", "pvd", "hsrdh", "roiwm"):
        out.add(payload_bytes_max=max(0, bits // 8 - container.OVERHEAD_BYTES))
    return out


def cmd_attack(args) -> Outcome:
    _need(args, "out")
    img = load_image(args.inp)
    k = args.kind
    if k == "fill":
        spec = harness.RegionFill(args.value, args.region)
    elif k == "saltpepper":
        spec = harness.SaltPepper(args.density, args.seed_int, args.region)
    elif k == "bitflips":
        spec = harness.BitFlips(args.count, args.seed_int, args.region)
    elif k == "paste":
        if args.region is None or args.dst is None:
            raise UsageError("paste needs --region (source) and --dst x,y")
        dx, dy = (int(v) for v in args.dst.split(","))
        spec = harness.Paste(args.region, dx, dy)
    else:
        raise UsageError(f"unknown attack kind {k}")
    attacked, truth = harness.apply_tamper(img, spec)
    save_image(attacked, args.out)
    out = Outcome().add(kind=k, changed_pixels=truth.count, out=args.out)
    if args.truth:
        save_image(truth.to_image(), args.truth)
        out.add(truth=args.truth)
    return out


# --------------------------------------------------------------------------


def _scheme_flags(p):
    p.add_argument("--scheme", choices=SCHEMES, required=True)
    p.add_argument("--in", dest="inp", required=True, help="input PGM/PPM")
    p.add_argument("--out", help="output file")
    p.add_argument("--payload", help="payload file to hide")
    p.add_argument("--message", help="payload given inline as UTF-8 text")
    p.add_argument("--key", type=_hexkey, help="16 hex digits")
    p.add_argument("--key1", type=_hexkey)
    p.add_argument("--key2", type=_hexkey)
    p.add_argument("--seed", type=_hexkey, help="k-means watermark seed, hex")
    p.add_argument("--bits", type=int, default=1, help="LSB bits per sample (1-4)")
    p.add_argument("--channels", help="LSB channel mask, e.g. g, rgb, rb, gray")
    p.add_argument("--order", choices=("seq", "perm"), default="seq")
    p.add_argument("--range-table", default="default", help="PVD ranges: default or 0-7,8-23,...")
    p.add_argument("--rounds", type=int, default=1)
    p.add_argument("--sidecar", help="HS-RDH recovery record path (default: <image>.hsrdh)")
    p.add_argument("--restored", help="write the restored cover here (hsrdh extract)")
    p.add_argument("--watermark", help="k-means watermark image")
    p.add_argument("--roi", type=_region, help="x,y,w,h")
    p.add_argument("--roni", type=_region, action="append", help="x,y,w,h (repeatable)")
    p.add_argument("--map", help="write the tamper map PGM here")
    p.add_argument("--recovered", help="write the recovered ROI here (roiwm verify)")


class _Parser(argparse.ArgumentParser):
    """Reports usage errors with the same ``status=ERROR`` first line."""

    def error(self, message):
        Outcome("ERROR", EXIT_USAGE).add(error="usage", detail=message).emit(sys.stdout)
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE)


def build_parser():
    parser = _Parser(prog="stegmark", description="Steganography and fragile watermarking toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("embed", cmd_embed), ("extract", cmd_extract), ("verify", cmd_verify), ("capacity", cmd_capacity)):
        p = sub.add_parser(name)
        _scheme_flags(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("metrics")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--window", choices=("full", "sliding"), default="full")
    p.add_argument("--literal-constants", action="store_true", help="use c1=0.02, c2=0.03")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("attack")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kind", choices=("fill", "saltpepper", "bitflips", "paste"), required=True)
    p.add_argument("--region", type=_region)
    p.add_argument("--value", type=int, default=0)
    p.add_argument("--density", type=float, default=0.01)
    p.add_argument("--seed", dest="seed_int", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--dst", help="paste destination x,y")
    p.add_argument("--truth", help="write the ground-truth map PGM here")
    p.set_defaults(func=cmd_attack)
    return parser


def main(argv=None, stdout=None):
    stdout = stdout or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        outcome = args.func(args)
    except CapacityError as exc:
        outcome = Outcome("ERROR", EXIT_CAPACITY).add(error="capacity", needed=exc.needed, available=exc.available)
    except (ImageFormatError, FrameError, lzwcodec.LzwDecodeError, hsrdh.RecordMismatchError,
            roiwm.WatermarkDestroyedError) as exc:
        outcome = Outcome("ERROR", EXIT_FORMAT).add(error=type(exc).__name__, detail=str(exc))
    except UsageError as exc:
        outcome = Outcome("ERROR", EXIT_USAGE).add(error="usage", detail=str(exc))
    except OSError as exc:
        outcome = Outcome("ERROR", EXIT_FORMAT).add(error="io", detail=str(exc))
    except ValueError as exc:
        log.debug("rejected input", exc_info=True)
        outcome = Outcome("ERROR", EXIT_USAGE).add(error="invalid", detail=str(exc))
    return outcome.emit(stdout)


if __name__ == "__main__":
    sys.exit(main())
