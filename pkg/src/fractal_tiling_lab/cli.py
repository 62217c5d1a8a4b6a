"""Batch front-end: fractal-tiling-lab <dim|content|curvature|check|render|presets>.

Exit codes: 0 on success, 2 when a requested formula's preconditions fail,
3 on configuration errors. All JSON output is key-sorted so identical
scenes produce byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, FtlError, PreconditionError
from .grids import ConvexPolygon, HalfspaceIntersection, IntervalUnion, PolygonUnion, Region
from .ifs import load_ifs
from .pipeline import CONTENT_METHODS, SceneBundle, get_bundle
from .presets import PRESETS, Preset, Scene, get_preset


def _region_from_json(doc) -> Region | str:
    if doc == "central":
        return "central"
    kind = doc.get("type")
    if kind == "intervals":
        return IntervalUnion(tuple(tuple(map(float, iv)) for iv in doc["intervals"]))
    if kind == "polygon":
        return ConvexPolygon(np.asarray(doc["vertices"], dtype=float))
    if kind == "polygons":
        return PolygonUnion(tuple(ConvexPolygon(np.asarray(v, float)) for v in doc["vertices"]))
    if kind == "halfspaces":
        return HalfspaceIntersection(np.asarray(doc["normals"], float), np.asarray(doc["offsets"], float))
    raise ConfigError(f"unknown region type {kind!r}")


def load_scene(args) -> tuple[str, Scene]:
    if args.scene:
        doc = json.loads(Path(args.scene).read_text(encoding="utf-8"))
        if "preset" in doc:
            preset = get_preset(doc["preset"])
            name, scene = preset.name, preset.scene
        else:
            ifs = load_ifs(doc["ifs"])
            region = _region_from_json(doc["region"])
            f_bbox = doc.get("f_bbox")
            if f_bbox is None:
                raise ConfigError("scene files need f_bbox: an IFS-invariant box around the attractor")
            scene = Scene(
                ifs, region, float(doc.get("delta", 2.0**-9)),
                (list(map(float, f_bbox[0])), list(map(float, f_bbox[1]))),
                int(doc.get("eps_per_decade", 64)), doc.get("name", "scene"),
            )
            name = scene.name
    elif args.preset:
        preset = get_preset(args.preset)
        name, scene = preset.name, preset.scene
    else:
        raise ConfigError("pass --preset NAME or --scene FILE")
    delta = args.delta if args.delta else scene.delta
    ppd = args.eps_per_decade if args.eps_per_decade else scene.eps_per_decade
    scene = Scene(scene.ifs, scene.region, delta, scene.f_bbox, ppd, name)
    return name, scene


def _emit(doc: dict, args) -> None:
    text = json.dumps(doc, sort_keys=True, indent=2, default=_json_default)
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / f"{doc['command']}_{doc['scene']}.json").write_text(text + "\n", encoding="utf-8")
    if args.format == "json":
        print(text)
    elif args.format == "table":
        _print_table(doc)
    elif args.format == "csv":
        _print_csv(doc)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _print_table(doc: dict) -> None:
    print(f"# {doc['command']} {doc['scene']} (delta={doc.get('delta')})")
    rows = doc.get("rows", {})
    if not rows:
        for k, v in doc.items():
            if k not in ("command", "scene", "rows"):
                print(f"{k:24s} {v}")
        return
    for key, row in rows.items():
        if isinstance(row, dict) and "refused" in row:
            print(f"{key:24s} REFUSED: {row['refused']}")
        elif isinstance(row, dict):
            val = row.get("value")
            err = row.get("error_estimate", "")
            extra = {k: v for k, v in row.items() if k in ("verdict", "band", "k", "window")}
            print(f"{key:24s} {val!s:24s} +-{err!s:12s} {extra if extra else ''}")
        else:
            print(f"{key:24s} {row}")


def _print_csv(doc: dict) -> None:
    rows = doc.get("rows", {})
    print("key,value,error,details")
    for key, row in rows.items():
        if isinstance(row, dict) and "refused" in row:
            print(f"{key},,,REFUSED: {row['refused']}")
        elif isinstance(row, dict):
            print(f"{key},{row.get('value', '')},{row.get('error_estimate', '')},")
        else:
            print(f"{key},{row},,")


def cmd_dim(args) -> int:
    name, scene = load_scene(args)
    bundle = get_bundle_for(name, scene, args)
    dd = bundle.dim_data
    doc = {
        "command": "dim",
        "scene": name,
        "delta": scene.delta,
        "rows": {
            "D": {"value": dd.D},
            "eta": {"value": dd.eta},
            "lattice": {"value": dd.lattice, "verdict": dd.note},
            "lattice_base": {"value": dd.lattice_base},
        },
    }
    _emit(doc, args)
    return 0


def get_bundle_for(name: str, scene: Scene, args) -> SceneBundle:
    return get_bundle(Preset(name, scene), delta=scene.delta)


def cmd_content(args) -> int:
    name, scene = load_scene(args)
    bundle = get_bundle_for(name, scene, args)
    methods = args.methods.split(",") if args.methods else list(CONTENT_METHODS)
    rows = {}
    refusals = 0
    for m in methods:
        try:
            rows[m] = bundle.content(m).to_dict()
        except PreconditionError as exc:
            rows[m] = {"refused": str(exc)}
            refusals += 1
    tiling_only = set()
    if not bundle.checks()["compatible"].passed:
        # the tiling's own content is well defined but does not estimate the
        # set's content without a compatible tiling
        for m in ("generator_integral", "tiling_via_h"):
            if m in rows and "value" in rows.get(m, {}):
                rows[m]["note"] = "not applicable to the set (no compatible tiling); tiling content only"
                tiling_only.add(m)
    values = {
        m: r["value"] for m, r in rows.items()
        if isinstance(r, dict) and "value" in r and m != "direct_limit"
        and m not in tiling_only
    }
    agreement = {}
    names = sorted(values)
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            denom = 0.5 * (abs(values[a]) + abs(values[b]))
            rel = abs(values[a] - values[b]) / denom if denom else 0.0
            agreement[f"{a}~{b}"] = round(rel, 6)
    doc = {
        "command": "content",
        "scene": name,
        "delta": scene.delta,
        "checks": {k: v.to_dict() for k, v in bundle.checks().items()},
        "rows": rows,
        "pairwise_relative_difference": agreement,
    }
    _emit(doc, args)
    return 2 if refusals and refusals == len(methods) else 0


def cmd_curvature(args) -> int:
    name, scene = load_scene(args)
    bundle = get_bundle_for(name, scene, args)
    from . import curvature as curvmod

    dd = bundle.dim_data
    k = args.k
    rows = {}
    code = 0
    try:
        gen = curvmod.generator_curvature(
            bundle.generator_curvature_samples(k), dd.D, dd.eta, k, bundle.d,
            bundle.tiling.g, lattice_note=dd.note,
        )
        rows["generator_integral"] = gen.to_dict()
    except PreconditionError as exc:
        rows["generator_integral"] = {"refused": str(exc)}
        code = 2
    try:
        checks = bundle.checks()
        rel = curvmod.relative_generator_curvature(
            bundle.relative_curvature(k), dd.D, dd.eta, k, bundle.d, bundle.g_tilde,
            checks=[checks["projection"], checks["boundary_null"]], lattice_note=dd.note,
        )
        rows["relative_generator"] = rel.to_dict()
        direct_samples = (
            bundle.relative_curvature(k, region="O") if bundle.d == 2
            else bundle.relative_curvature(k)
        )
        limit, average = curvmod.direct_fractal_curvature(
            direct_samples, dd.D, k,
            window=(8 * bundle.delta, bundle.g_tilde / 3), lattice_base=bundle.lattice_base,
        )
        rows["direct_limit"] = limit.to_dict()
        rows["direct_average"] = average.to_dict()
    except PreconditionError as exc:
        rows["relative_generator"] = {"refused": str(exc)}
        code = 2
    doc = {"command": "curvature", "scene": name, "delta": scene.delta, "k": k, "rows": rows}
    _emit(doc, args)
    return code if len(rows) == sum(1 for r in rows.values() if "refused" in r) else 0


def cmd_check(args) -> int:
    name, scene = load_scene(args)
    bundle = get_bundle_for(name, scene, args)
    reports = bundle.checks()
    doc = {
        "command": "check",
        "scene": name,
        "delta": scene.delta,
        "rows": {k: v.to_dict() for k, v in reports.items()},
    }
    _emit(doc, args)
    return 0


def cmd_render(args) -> int:
    name, scene = load_scene(args)
    bundle = get_bundle_for(name, scene, args)
    outdir = Path(args.out or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    t = bundle.tiling
    t.G.to_pgm(outdir / f"{name}_G.pgm")
    t.Gamma.to_pgm(outdir / f"{name}_Gamma.pgm")
    t.tile_union.to_pgm(outdir / f"{name}_tiles.pgm")
    manifest = dict(t.manifest(), g_tilde=bundle.g_tilde)
    (outdir / f"{name}_tiling.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2, default=_json_default) + "\n",
        encoding="utf-8",
    )
    field = bundle.field_small
    eps_list = [8 * scene.delta, bundle.g_tilde / 2, bundle.g_tilde]
    made = []
    for i, eps in enumerate(eps_list):
        occ = field.values <= eps
        g = t.O.with_occupancy(occ) if occ.shape == t.O.extents else None
        from .grids import Grid

        Grid(field.origin, field.spacing, occ).to_pgm(outdir / f"{name}_Feps{i}.pgm")
        made.append(f"{name}_Feps{i}.pgm")
    if bundle.d == 2:
        _render_svg(bundle, eps_list[1], outdir / f"{name}_contour.svg")
        made.append(f"{name}_contour.svg")
    doc = {
        "command": "render",
        "scene": name,
        "delta": scene.delta,
        "rows": {"files": made + [f"{name}_G.pgm", f"{name}_Gamma.pgm", f"{name}_tiles.pgm"]},
    }
    _emit(doc, args)
    return 0


def _render_svg(bundle: SceneBundle, eps: float, path: Path) -> None:
    ex = bundle.field_extractor
    ls = ex.extract(eps)
    lo = bundle.field_small.origin
    scale = 1000.0
    lines = []
    for p, q in zip(ls.p_in, ls.p_out):
        x1, y1 = (p - lo) * scale
        x2, y2 = (q - lo) * scale
        lines.append(
            f'<line x1="{x1:.1f}" y1="{y1:.1f}" x2="{x2:.1f}" y2="{y2:.1f}" '
            'stroke="black" stroke-width="0.7"/>'
        )
    n = np.array(bundle.field_small.extents) * scale * bundle.delta
    body = "\n".join(lines)
    path.write_text(
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {n[0]:.0f} {n[1]:.0f}">\n'
        f"{body}\n</svg>\n",
        encoding="utf-8",
    )


def cmd_presets(args) -> int:
    rows = {}
    for name, preset in sorted(PRESETS.items()):
        rows[name] = {
            "delta": preset.scene.delta,
            "dim": preset.scene.ifs.ambient_dim,
            "maps": preset.scene.ifs.n,
            "expected": preset.expected,
        }
    _emit({"command": "presets", "scene": "catalog", "rows": rows}, args)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fractal-tiling-lab")
    sub = ap.add_subparsers(dest="command", required=True)
    for cmd, fn in (
        ("dim", cmd_dim),
        ("content", cmd_content),
        ("curvature", cmd_curvature),
        ("check", cmd_check),
        ("render", cmd_render),
        ("presets", cmd_presets),
    ):
        p = sub.add_parser(cmd)
        p.add_argument("--scene", help="scene JSON file")
        p.add_argument("--preset", help="preset name")
        p.add_argument("--delta", type=float, default=None)
        p.add_argument("--eps-per-decade", type=int, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=("json", "csv", "table"), default="table")
        if cmd == "content":
            p.add_argument("--methods", default=None, help="comma-separated method tags")
        if cmd == "curvature":
            p.add_argument("-k", type=int, default=1)
        p.set_defaults(fn=fn)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except PreconditionError as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 3
    except FtlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
