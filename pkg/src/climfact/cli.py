"""Batch front-end: ingest, climatology, shocks, projections, factors.

Every subcommand reads one JSON run configuration, performs its stage of
the pipeline, and writes its products into the output directory. Outputs
are deterministic: identical config and inputs produce byte-identical
trees (seeds for permutation tests come from the config or --seed).

Exit codes: 0 ok, 2 configuration error, 3 data error, 4 numerical
failure.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import climatology as cl
from . import config as cfg
from . import factors as af
from . import fira as fr
from . import ingest
from . import localproj as lp
from . import svgplot
from . import synth
from .errors import (
    ClimfactError,
    ConfigError,
    DataError,
    EmptyRegion,
    NumericalError,
    ParseError,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


# -- small helpers ---------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj


def _write_json(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _say(args, message):
    if not args.quiet:
        print(message)


def _out_dir(args, config):
    out = args.out or config.get("output_dir")
    if not out:
        raise ConfigError("config is missing required key output_dir "
                          "(or pass --out)")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _seed(args, config):
    return args.seed if args.seed is not None else config.get("seed", 42)


def _load_grids(config, names=None):
    table = {}
    for i, entry in enumerate(cfg.require(config, "grids")):
        if names is not None and entry["name"] not in names:
            continue
        step = entry.get("step")
        if isinstance(step, list):
            step = tuple(step)
        try:
            table[entry["name"]] = ingest.load_gridded(
                entry["path"], variable=entry["name"], step=step,
                weighting=entry.get("weighting", "coslat"),
            )
        except FileNotFoundError:
            raise ConfigError(
                f"config key grids[{i}].path: no such file {entry['path']!r}"
            ) from None
    if not table:
        raise ConfigError("config key grids selects no input")
    return table


def _grid(config, grids, name):
    if name not in grids:
        raise ConfigError(f"config names unknown grid variable {name!r}")
    return grids[name]


def _region_mask(domain, entry):
    """Boolean raster from a region entry ('cells': 'all' or a lat,lon CSV)."""
    if entry.get("cells") == "all":
        return np.ones(domain.shape, dtype=bool)
    path = entry.get("path")
    if not path:
        raise ConfigError(
            f"region {entry.get('name')!r} needs either cells or path"
        )
    mask = np.zeros(domain.shape, dtype=bool)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["lat", "lon"]:
            raise ParseError("region file needs header lat,lon", path=path, line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                lat, lon = float(row[0]), float(row[1])
            except (ValueError, IndexError):
                raise ParseError("bad region row", path=path, line=lineno) from None
            i = int(np.floor((lat - domain.lat_min) / domain.step_lat))
            j = int(np.floor((lon - domain.lon_min) / domain.step_lon))
            if not (0 <= i < domain.n_lat and 0 <= j < domain.n_lon):
                raise EmptyRegion(
                    f"region cell ({lat}, {lon}) lies outside the grid"
                )
            mask[i, j] = True
    return mask


def _regions(config, domain):
    entries = config.get("regions") or [{"name": "ALL", "cells": "all"}]
    return {e["name"]: _region_mask(domain, e) for e in entries}


def _region_average(domain, raster, region_mask):
    combined = region_mask & domain.mask
    w = domain.weights[combined]
    total = w.sum()
    if total <= 0:
        raise EmptyRegion("region has no overlap with valid cells")
    return float(raster[combined] @ (w / total))


def _load_panel(config, key, required=False):
    entry = config.get("panels", {}).get(key)
    if entry is None:
        if required:
            raise ConfigError(f"config is missing required key panels.{key}")
        return None
    loader = (ingest.load_sector_panel if key == "sectors"
              else ingest.load_control_panel)
    try:
        return loader(entry["path"], transform=entry.get("transform", "yoy"))
    except FileNotFoundError:
        raise ConfigError(
            f"config key panels.{key}.path: no such file {entry['path']!r}"
        ) from None


def _anomaly_series(config, series):
    window = tuple(config.get("baseline", {}).get(
        "reference_window", cl.DEFAULT_REFERENCE_WINDOW))
    baseline = cl.compute_baseline(series, window)
    return cl.anomaly(series, baseline)


def _shock_table(config, grids):
    """Threshold + conditioned shock variants from the shocks config."""
    section = cfg.require(config, "shocks")
    series = _grid(config, grids, section["variable"])
    anomalies = _anomaly_series(config, series)
    regions = _regions(config, series.domain)
    region_name = section.get("region")
    if region_name is None:
        region_name = next(iter(regions))
    if region_name not in regions:
        raise ConfigError(f"config names unknown region {region_name!r}")
    scalar = cl.regional_mean(anomalies, regions[region_name])
    window = tuple(section.get("threshold_window", cl.DEFAULT_THRESHOLD_WINDOW))
    threshold = section.get("threshold", "auto")
    if threshold == "auto":
        threshold = cl.default_threshold(scalar, window)
    variants = tuple(section.get("variants", ("all",)))
    table = cl.shock_variants(
        scalar, threshold,
        extreme_multiplier=section.get("extreme_multiplier", 1.5),
        variants=variants,
    )
    return float(threshold), window, region_name, scalar, table


# -- subcommands ------------------------------------------------------------


def cmd_baseline(args, config):
    out = _out_dir(args, config)
    grids = _load_grids(config)
    window = tuple(config.get("baseline", {}).get(
        "reference_window", cl.DEFAULT_REFERENCE_WINDOW))
    summary_rows = []
    for name in grids:
        series = grids[name]
        baseline = cl.compute_baseline(series, window)
        with open(out / f"baseline_{name}.csv", "w", newline="",
                  encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["month", "lat", "lon", "value"])
            lat_c, lon_c = series.domain.lat_centers, series.domain.lon_centers
            ii, jj = np.nonzero(series.domain.mask)
            for m in range(12):
                grid = baseline.month_means[m]
                for i, j in zip(ii, jj):
                    writer.writerow([
                        f"{m + 1:02d}",
                        ingest.format_float(lat_c[i]),
                        ingest.format_float(lon_c[j]),
                        ingest.format_float(grid[i, j]),
                    ])
        for region_name, region in _regions(config, series.domain).items():
            row = [region_name, name]
            for m in range(12):
                row.append(_region_average(series.domain,
                                           baseline.month_means[m], region))
            summary_rows.append(row)
    with open(out / "baseline_summary.csv", "w", newline="",
              encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["region", "variable"]
                        + [f"m{m + 1:02d}" for m in range(12)])
        for row in summary_rows:
            writer.writerow(row[:2] + [ingest.format_float(v) for v in row[2:]])
    _say(args, f"baseline: {len(grids)} variable(s) -> {out}")
    return EXIT_OK


def cmd_anomaly(args, config):
    out = _out_dir(args, config)
    section = config.get("anomaly", {})
    names = section.get("variables")
    grids = _load_grids(config, set(names) if names else None)
    for name in grids:
        series = grids[name]
        anomalies = _anomaly_series(config, series)
        if section.get("write_grids", False):
            ingest.write_gridded_csv(anomalies, out / f"anomaly_{name}.csv")
        for region_name, region in _regions(config, series.domain).items():
            scalar = cl.regional_mean(anomalies, region)
            with open(out / f"anomaly_mean_{name}_{region_name}.csv", "w",
                      newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["time", "value"])
                for t, v in zip(scalar.times, scalar.values):
                    writer.writerow([str(t), ingest.format_float(v)])
    _say(args, f"anomaly: {len(grids)} variable(s) -> {out}")
    return EXIT_OK


def cmd_shocks(args, config):
    out = _out_dir(args, config)
    grids = _load_grids(config, {cfg.require(config, "shocks", "variable")})
    threshold, window, region_name, _, table = _shock_table(config, grids)
    for variant, shock in table.items():
        cl.write_shock_csv(shock, out / f"shocks_{variant}.csv")
    _write_json(out / "shocks_report.json", {
        "threshold": threshold,
        "threshold_window": list(window),
        "region": region_name,
        "variable": config["shocks"]["variable"],
        "events": {variant: shock.n_events for variant, shock in table.items()},
        "seed": _seed(args, config),
    })
    _say(args, f"shocks: threshold {threshold:.4g}, "
               f"{sum(s.n_events for s in table.values())} events -> {out}")
    return EXIT_OK


def _lp_spec(config):
    section = config.get("lp", {})
    return lp.LpSpec(
        h_max=section.get("h_max", 24),
        p_max=section.get("p_max", 12),
        r=section.get("r", 0),
        l_max=section.get("l_max", 12),
        lag_selection=section.get("lag_selection", "aic"),
        ci_level=section.get("ci_level", 0.90),
        contemporaneous_controls=section.get("contemporaneous_controls", False),
    )


def _endogenous_subset(extra, panel, sector):
    """Endogenous block for one sector: its matching counterpart column
    (same id, e.g. producer prices at the same code) plus every shared
    series; sectors without a counterpart simply omit it."""
    if extra is None:
        return None
    ids = [i for i in extra.sector_ids
           if i == sector or i not in panel.sector_ids]
    if not ids:
        return None
    cols = [extra.sector_ids.index(i) for i in ids]
    return ingest.ControlPanel(extra.times, tuple(ids),
                               extra.values[:, cols])


def cmd_lp(args, config):
    out = _out_dir(args, config)
    grids = _load_grids(config, {cfg.require(config, "shocks", "variable")})
    _, _, _, _, shock_table = _shock_table(config, grids)
    panel = _load_panel(config, "sectors", required=True)
    extra = _load_panel(config, "endogenous")
    controls = _load_panel(config, "controls")
    section = config.get("lp", {})
    sectors = section.get("sectors", "all")
    if sectors == "all":
        sectors = panel.sector_ids
    else:
        missing = [s for s in sectors if s not in panel.sector_ids]
        if missing:
            raise ConfigError(f"config key lp.sectors names unknown ids "
                              f"{missing}")
    spec = _lp_spec(config)

    # group sectors sharing the same endogenous block so each group runs
    # as one battery; merged results keep the original sector order
    groups = {}
    for sector in sectors:
        subset = _endogenous_subset(extra, panel, sector)
        key = subset.sector_ids if subset is not None else ()
        groups.setdefault(key, (subset, []))[1].append(sector)
    merged_results = {}
    merged_failures = []
    for subset, group in groups.values():
        battery = lp.run_battery(panel, shock_table, spec,
                                 extra_endogenous=subset, controls=controls,
                                 sectors=group, threads=args.threads)
        merged_results.update(battery.results)
        merged_failures.extend(battery.failures)
    order = {s: i for i, s in enumerate(sectors)}
    variant_order = {v: i for i, v in enumerate(shock_table)}
    battery = lp.BatteryResult(
        results=dict(sorted(merged_results.items(),
                            key=lambda kv: (order[kv[0][0]],
                                            variant_order[kv[0][1]]))),
        failures=tuple(sorted(merged_failures,
                              key=lambda f: (order[f[0]],
                                             variant_order[f[1]]))),
    )

    for (sector, variant), result in battery.results.items():
        stem = f"lp_{sector}_{variant}"
        with open(out / f"{stem}.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["sector", "variant", "h", "estimate", "se",
                             "lo", "hi", "p", "l"])
            for h in result.horizons:
                writer.writerow([
                    sector, variant, int(h),
                    ingest.format_float(result.estimate[h]),
                    ingest.format_float(result.se[h]),
                    ingest.format_float(result.lo[h]),
                    ingest.format_float(result.hi[h]),
                    result.p, result.l,
                ])
        if section.get("figures", True):
            svg = svgplot.fan_chart(
                result.horizons, result.estimate, result.lo, result.hi,
                f"{sector} response to {variant} shock "
                f"({int(result.ci_level * 100)}% band)",
            )
            (out / f"{stem}.svg").write_text(svg, encoding="utf-8")

    with open(out / "failures.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sector", "variant", "error", "detail"])
        for sector, variant, err, detail in battery.failures:
            writer.writerow([sector, variant, err, detail])

    n_ok, n_fail = len(battery.results), len(battery.failures)
    _say(args, f"lp: {n_ok} cell(s) ok, {n_fail} failed -> {out}")
    if n_ok == 0:
        raise NumericalError("every battery cell failed; see failures.csv")
    return EXIT_OK


def cmd_factors(args, config):
    out = _out_dir(args, config)
    section = cfg.require(config, "factors")
    grids = _load_grids(config, {section["variable"]})
    series = grids[section["variable"]]
    if section.get("use_anomalies", True):
        series = _anomaly_series(config, series)
    panel = _load_panel(config, "sectors", required=True)

    permutation = section.get("permutation", False)
    perm_cfg = None
    if permutation:
        perm_cfg = permutation if isinstance(permutation, dict) else {}
    rng = np.random.default_rng(_seed(args, config))
    result = af.associated_factors(
        panel, series,
        tol=section.get("tol", 0.1),
        k=section.get("k"),
        permutation=perm_cfg, rng=rng,
    )
    diagnostic = af.regularity_diagnostic(panel, series)

    with open(out / "factor_loadings.csv", "w", newline="",
              encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sector"] + [f"a{k + 1}" for k in range(result.k)])
        for j, sector in enumerate(result.sector_ids):
            writer.writerow([sector] + [ingest.format_float(result.a[k, j])
                                        for k in range(result.k)])
    for k in range(result.k):
        ingest.write_surface_csv(result.b_surface(k),
                                 out / f"factor_b_{k + 1}.csv",
                                 name=f"b{k + 1}")
    _write_json(out / "factors_report.json", {
        "k": result.k,
        "rho": result.rho,
        "singular_values": result.singular_values,
        "variable": section["variable"],
        "regularity": {
            "n_components": diagnostic.n_components,
            "flagged": diagnostic.flagged,
            "tail_fraction": diagnostic.tail_fraction,
        },
        "permutation": perm_cfg if permutation else None,
        "seed": _seed(args, config),
    })
    _say(args, f"factors: K={result.k}, rho_1={result.rho[0]:.4f} -> {out}")
    return EXIT_OK


def cmd_fira(args, config):
    out = _out_dir(args, config)
    section = cfg.require(config, "fira")
    grids = _load_grids(config, {section["variable"]})
    series = grids[section["variable"]]
    if section.get("use_anomalies", True):
        series = _anomaly_series(config, series)
    panel = _load_panel(config, "sectors", required=True)
    controls = _load_panel(config, "controls")

    q, s, l = section.get("lags", [0, 0, 0])
    design = fr.build_design(series, y=panel if s > 0 else None,
                             z=controls, lags=(q, s, l),
                             standardize=section.get("standardize", False))
    permutation = section.get("permutation", False)
    perm_cfg = None
    if permutation:
        perm_cfg = permutation if isinstance(permutation, dict) else {}
    fitted = fr.fit_fira(design, panel,
                         h_max=section.get("h_max", 12),
                         tol=section.get("tol", 0.1), k=section.get("k"),
                         permutation=perm_cfg,
                         rng=np.random.default_rng(_seed(args, config)))

    shock_reports = []
    for idx, spec in enumerate(section["shocks"]):
        shock = fr.make_shock_surface(
            spec["magnitude"], tuple(spec["center"]), spec["radius_km"],
            series.domain, profile=spec.get("profile", "cosine-taper"),
        )
        response = fr.respond(fitted, shock)
        with open(out / f"fira_response_{idx + 1}.csv", "w", newline="",
                  encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["sector", "h", "response", "response_pp"])
            for j, sector in enumerate(response.sector_ids):
                for h in response.horizons:
                    writer.writerow([
                        sector, int(h),
                        ingest.format_float(response.canonical[h, j]),
                        ingest.format_float(response.percentage_points[h, j]),
                    ])
        figure = svgplot.fira_figure(
            series.domain, shock.surface.values, response.canonical,
            response.sector_ids, response.horizons,
            f"functional impulse responses: {shock.magnitude:g} shock, "
            f"radius {shock.radius_km:g} km",
        )
        (out / f"fira_shock_{idx + 1}.svg").write_text(figure, encoding="utf-8")
        shock_reports.append({
            "magnitude": shock.magnitude,
            "center": list(shock.center),
            "radius_km": shock.radius_km,
            "profile": shock.profile,
            "footprint_area_km2": shock.footprint_area_km2,
            "n_cells": shock.n_cells,
        })

    _write_json(out / "fira_report.json", {
        "variable": section["variable"],
        "lags": [q, s, l],
        "horizons": fitted.horizons,
        "k_per_horizon": [e.k if e else 0 for e in fitted.by_horizon],
        "rho_per_horizon": [e.rho if e else [] for e in fitted.by_horizon],
        "failures": [list(f) for f in fitted.failures],
        "shocks": shock_reports,
        "seed": _seed(args, config),
    })
    _say(args, f"fira: {len(shock_reports)} shock(s), "
               f"h_max={section.get('h_max', 12)} -> {out}")
    return EXIT_OK


def cmd_synth(args, config):
    out = _out_dir(args, config)
    section = cfg.require(config, "synth")
    kind = section["kind"]
    rng = np.random.default_rng(_seed(args, config))
    fmt = section.get("format", "csv")
    manifest = {"kind": kind, "seed": _seed(args, config), "files": []}

    def write_grid(series, stem):
        if fmt == "binary":
            path = out / f"{stem}.sgf"
            ingest.write_gridded_binary(series, path)
        else:
            path = out / f"{stem}.csv"
            ingest.write_gridded_csv(series, path)
        manifest["files"].append(path.name)
        return path

    def write_panel(panel, stem):
        path = out / f"{stem}.csv"
        ingest.write_panel_csv(panel, path)
        manifest["files"].append(path.name)
        return path

    if kind == "normals":
        domain = synth.ea_domain(step=section.get("step", 2.0))
        years = tuple(section.get("years", (1950, 1980)))
        warming = section.get("warming")
        for variable in synth.EA_MONTHLY_NORMALS:
            series = synth.normals_series(
                domain, variable, years=years,
                warming=warming if variable == "temperature" else None,
            )
            write_grid(series, variable)
    elif kind == "planted-lp":
        months_n = section.get("months", 252)
        grid = synth.normals_series(
            synth.ea_domain(step=section.get("step", 2.0)), "temperature",
            warming=synth.TEMPERATURE_DEVIATION_MEANS["EA"],
        )
        write_grid(grid, "temperature")
        anomalies = cl.anomaly(grid, cl.compute_baseline(grid))
        scalar = cl.regional_mean(anomalies).slice_window(
            np.datetime64("2001-01", "M"), np.datetime64("2021-12", "M"))
        threshold = cl.default_threshold(scalar)
        shock = cl.make_shocks(scalar, threshold)
        p = section.get("sectors", 3)
        t = min(months_n, len(shock))
        values = rng.normal(size=(t, p))
        values[:, 0] += 0.6 * shock.values[:t]
        panel = ingest.SectorPanel(shock.times[:t],
                                   tuple(f"CP{j:03d}" for j in range(p)),
                                   values)
        write_panel(panel, "sectors")
        manifest["planted"] = {"sector": "CP000", "coefficient": 0.6,
                               "threshold": threshold}
    elif kind == "planted-factor":
        domain = synth.de_domain(step=section.get("step", 1.0))
        panel, series, _ = synth.planted_factor_instance(
            domain, p=section.get("sectors", 6),
            T=section.get("months", 252), rng=rng,
            snr=section.get("snr", 10.0),
        )
        write_grid(series, "planted")
        write_panel(panel, "sectors")
    elif kind == "fira-demo":
        panel, series, _ = synth.fira_demo_instance(
            rng, p=section.get("sectors", 8),
            T=section.get("months", 252),
            step=section.get("step", 0.5),
        )
        write_grid(series, "temperature_anomaly")
        write_panel(panel, "sectors")
    _write_json(out / "synth_manifest.json", manifest)
    _say(args, f"synth: {kind} -> {out}")
    return EXIT_OK


# -- entry point -------------------------------------------------------------


COMMANDS = {
    "baseline": cmd_baseline,
    "anomaly": cmd_anomaly,
    "shocks": cmd_shocks,
    "lp": cmd_lp,
    "factors": cmd_factors,
    "fira": cmd_fira,
    "synth": cmd_synth,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="climfact",
        description="Weather anomalies, threshold shocks, impulse responses "
                    "and associated factors on gridded data.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="run configuration JSON")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, help="seed override for "
                                                 "permutation tests")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for batteries")
    parser.add_argument("--quiet", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = cfg.load_config(args.config)
        return COMMANDS[args.command](args, config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: missing file {exc.filename}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DataError, ClimfactError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
