"""
Command-line entry point.

Commands: table, load, mec, place, apps, gen. Every command is
deterministic given (config, seed); all randomness flows from the one
root seed. Results are written as CSV atomically (temp file + rename).

Exit codes: 0 success, 1 usage error, 2 data error, 3 acceptance-check
failure.
"""
import argparse
import configparser
import csv
import os
import sys

from . import datasets, experiments, mecsweep, placement, transport

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_CHECK = 3

US = 1_000_000

DEFAULTS = {
    "load": {
        "rates_per_s": "2,4,8,16,24,30",
        "core_service_rate": "500",
        "duration_s": "20",
        "link_latency_us": "1000",
    },
    "mec": {
        "grid": "20x20",
        "ue_count": "8000",
        "handover_rate_per_min": "5",
        "duration_min": "10",
        "c_intra": "15",
        "c_inter": "50",
    },
    "place": {
        "budget_km": "300",
        "core_budget": "10",
        "counties": "",
        "pops": "",
        "cdns": "",
        "n_counties": "40",
        "n_pops": "8",
        "n_cdns": "4",
    },
    "apps": {
        "file_mb": "100",
        "video_s": "60",
        "live_s": "10",
        "handover_at_s": "5",
        "forwarding": "false",
    },
    "gen": {
        "n_counties": "40",
        "n_pops": "8",
        "n_cdns": "4",
    },
}


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def load_config(path):
    """Flat key=value config with section headers; unknown keys rejected."""
    config = {s: dict(kv) for s, kv in DEFAULTS.items()}
    if path is None:
        return config
    if not os.path.exists(path):
        raise UsageError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    parser.read(path)
    for section in parser.sections():
        if section not in config:
            raise UsageError(f"unknown config section [{section}]")
        for key, value in parser.items(section):
            if key not in config[section]:
                raise UsageError(f"unknown config key [{section}] {key}")
            config[section][key] = value
    return config


def write_csv_atomic(path, header, rows):
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows(rows)
    os.replace(tmp, path)
    return path


def _emit(args, header, rows, filename):
    if args.format == "csv" or args.out:
        out_dir = args.out or "."
        os.makedirs(out_dir, exist_ok=True)
        path = write_csv_atomic(os.path.join(out_dir, filename), header, rows)
        print(path)
    if args.format == "pretty":
        widths = [max(len(str(h)), *(len(str(r[i])) for r in rows)) if rows
                  else len(str(h)) for i, h in enumerate(header)]
        print("  ".join(str(h).ljust(w) for h, w in zip(header, widths)))
        for r in rows:
            print("  ".join(str(v).ljust(w) for v, w in zip(r, widths)))


def cmd_table(args, config):
    rows, _ = experiments.run_message_table(mode=args.mode, seed=args.seed)
    header = ("arch", "quic_min", "quic_max", "network_total",
              "network_via_core", "total_min", "total_max")
    _emit(args, header, [r.to_csv_row() for r in rows], "table.csv")

    by_arch = {r.arch: r for r in rows}
    checks = [
        by_arch["LTE"].network_total == 15,
        by_arch["LTE"].network_via_core == 15,
    ]
    if args.mode == "direct":
        checks += [by_arch["EnCoR"].network_total == 6,
                   by_arch["EnCoR"].network_via_core == 0]
    else:
        checks += [by_arch["EnCoR"].network_total == 7,
                   by_arch["EnCoR"].network_via_core == 2,
                   8 <= by_arch["EnCoR+modQUIC"].total_min,
                   by_arch["EnCoR+modQUIC"].total_max <= 10]
    return EXIT_OK if all(checks) else EXIT_CHECK


def cmd_load(args, config):
    section = config["load"]
    scenario = experiments.LoadScenario(
        rates_per_s=tuple(float(r) for r in section["rates_per_s"].split(",")),
        core_service_rate=float(section["core_service_rate"]),
        duration_s=float(section["duration_s"]),
        link_latency_us=int(section["link_latency_us"]),
        seed=args.seed)
    results = experiments.run_load_sweep(scenario)
    header = ("arch", "rate_per_s", "mean_ms", "p95_ms",
              "core_msgs_per_ho", "core_utilization", "saturated",
              "completions")
    rows = [p.to_csv_row() for arch in ("encor", "lte") for p in results[arch]]
    _emit(args, header, rows, "load.csv")
    return EXIT_OK


def cmd_mec(args, config):
    section = config["mec"]
    grid_spec = args.grid or section["grid"]
    try:
        w, h = (int(v) for v in grid_spec.lower().split("x"))
    except ValueError:
        raise UsageError(f"bad grid spec: {grid_spec}")
    grid = mecsweep.GridNetwork(
        width=w, height=h, ue_count=int(section["ue_count"]),
        handover_rate_per_min=float(section["handover_rate_per_min"]))
    points, ratios = mecsweep.sweep(
        grid, duration_min=float(section["duration_min"]), seed=args.seed,
        c_intra=float(section["c_intra"]), c_inter=float(section["c_inter"]))
    header = ("k", "anchors_per_station", "handovers", "inter",
              "messages", "ratio_vs_k1")
    _emit(args, header, mecsweep.to_csv_rows(points, ratios), "mec.csv")
    return EXIT_OK


def _load_place_datasets(args, section):
    if args.synthetic or not section["counties"]:
        return datasets.generate_synthetic(
            args.seed, n_counties=int(section["n_counties"]),
            n_pops=int(section["n_pops"]), n_cdns=int(section["n_cdns"]))
    counties = datasets.load_counties(section["counties"])
    pops = datasets.load_sites(section["pops"], placement.SiteKind.PEERING_POP)
    cdns = datasets.load_sites(section["cdns"], placement.SiteKind.CDN_POP)
    return counties, pops, cdns


def cmd_place(args, config):
    section = config["place"]
    counties, pops, cdns = _load_place_datasets(args, section)
    budget_km = float(section["budget_km"])
    core_budget = int(section["core_budget"])

    deployment = placement.greedy_place(counties, pops, cdns,
                                        core_budget, budget_km)
    place_rows = [(rank + 1, site.id, marginal)
                  for rank, (site, marginal) in enumerate(
                      zip(deployment.core_sites,
                          deployment.marginal_populations))]
    _emit(args, ("rank", "pop_id", "marginal_population"), place_rows,
          "placement.csv")

    curve_rows = []
    for n in range(1, core_budget + 1):
        d = placement.greedy_place(counties, pops, cdns, n, budget_km)
        cov = placement.coverage(counties, budget_km, deployment=d,
                                 pops=pops, cdns=cdns)
        curve_rows.append((budget_km, n, "3gpp", round(cov, 6)))
    encor_cov = placement.coverage(counties, budget_km, pops=pops, cdns=cdns)
    curve_rows.append((budget_km, len(pops), "encor", round(encor_cov, 6)))
    _emit(args, ("budget_km", "core_budget", "mode", "coverage_fraction"),
          curve_rows, "coverage.csv")

    model = placement.CostModel()
    cost_3gpp, cost_encor, savings = placement.cost_compare(
        model, core_budget, len(pops))
    _emit(args, ("cost_3gpp", "cost_encor", "savings_fraction"),
          [(cost_3gpp, cost_encor, round(savings, 6))], "cost.csv")
    return EXIT_OK


def cmd_apps(args, config):
    section = config["apps"]
    ho_us = round(float(section["handover_at_s"]) * US)
    forwarding = section["forwarding"].lower() in ("1", "true", "yes")
    params = transport.TransportParams(forwarding_enabled=forwarding)
    file_bytes = round(float(section["file_mb"]) * 1_000_000)

    rows = []
    bulk = transport.run_bulk(file_bytes, [ho_us], params, seed=args.seed)
    rows.append(bulk.to_csv_row())
    buffered = transport.run_buffered(float(section["video_s"]), [ho_us],
                                      params, seed=args.seed)
    rows.append(buffered.to_csv_row())
    for policy in (transport.Policy.PASSIVE_ONLY, transport.Policy.PING_ON_IDLE):
        live = transport.run_live(float(section["live_s"]),
                                  [round(float(section["live_s"]) * US / 3)],
                                  policy, params, seed=args.seed)
        rows.append(live.to_csv_row())
    header = ("app", "policy", "handovers", "throughput_mbps", "retx_rate",
              "stall_s", "buffer_s", "quality", "fps", "deadlocked")
    _emit(args, header, rows, "apps.csv")
    return EXIT_OK


def cmd_gen(args, config):
    section = config["gen"]
    counties, pops, cdns = datasets.generate_synthetic(
        args.seed, n_counties=int(section["n_counties"]),
        n_pops=int(section["n_pops"]), n_cdns=int(section["n_cdns"]))
    out_dir = args.out or "."
    paths = datasets.write_dataset(out_dir, counties, pops, cdns)
    for path in paths.values():
        print(path)
    return EXIT_OK


def build_parser():
    parser = Parser(prog="encorsim",
                    description="edge-routed cellular core simulator")
    parser.add_argument("--config", default=None)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=None)
    parser.add_argument("--format", choices=("csv", "pretty"),
                        default="pretty")
    sub = parser.add_subparsers(dest="command", required=True)

    p_table = sub.add_parser("table", help="per-handover message counts")
    p_table.add_argument("--mode", choices=("core-assisted", "direct"),
                         default="core-assisted")
    p_table.set_defaults(func=cmd_table)

    sub.add_parser("load", help="handover latency under load") \
        .set_defaults(func=cmd_load)

    p_mec = sub.add_parser("mec", help="anchor-density message scaling")
    p_mec.add_argument("--grid", default=None)
    p_mec.set_defaults(func=cmd_mec)

    p_place = sub.add_parser("place", help="core placement and cost")
    p_place.add_argument("--synthetic", action="store_true")
    p_place.set_defaults(func=cmd_place)

    sub.add_parser("apps", help="transport application runs") \
        .set_defaults(func=cmd_apps)
    sub.add_parser("gen", help="generate a synthetic dataset") \
        .set_defaults(func=cmd_gen)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    try:
        config = load_config(args.config)
        return args.func(args, config)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (datasets.IngestError, mecsweep.TilingError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
