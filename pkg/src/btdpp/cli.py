"""Experiment driver.

Thin orchestration over the library: parse a JSON config, run one of the
verification suites, and emit deterministic CSV bodies plus JSON summaries.
Numeric work is imported lazily so that ``--threads`` can pin the BLAS pool
before any linear algebra library comes up.

Reproducibility contract: CSV bodies are a pure function of (config, seed);
timestamps and host details go to a ``.meta.json`` sidecar, never into the
body.  Floats print with 17 significant digits so files round-trip.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

FLOAT_FMT = "%.17g"

_TERM_SCHEMA = {
    "type": "object",
    "required": ["atom", "coeff"],
    "additionalProperties": False,
    "properties": {
        "atom": {"enum": ["ReZ", "ImZ", "ReZ2", "ImZ2", "Const",
                          "GaussBump", "RadialBump", "AngularWindow"]},
        "coeff": {"type": "number"},
        "center": {"type": "array", "items": {"type": "number"},
                   "minItems": 2, "maxItems": 2},
        "width": {"type": "number", "exclusiveMinimum": 0},
        "r_c": {"type": "number"},
        "s": {"type": "number", "exclusiveMinimum": 0},
        "potential": {"$ref": "#/$defs/potential"},
        "mu": {"type": "number"},
        "w": {"type": "number", "exclusiveMinimum": 0},
        "m": {"type": "integer"},
    },
}

CONFIG_SCHEMA = {
    "$defs": {
        "potential": {
            "type": "object",
            "required": ["family"],
            "additionalProperties": False,
            "properties": {
                "family": {"enum": ["radial", "anisotropic_quadratic",
                                    "polynomial_xy"]},
                "profile": {"type": "array",
                            "items": {"type": "array", "minItems": 2,
                                      "maxItems": 2,
                                      "items": {"type": "number"}}},
                "t": {"type": "number"},
                "terms": {"type": "array",
                          "items": {"type": "array", "minItems": 3,
                                    "maxItems": 3,
                                    "items": {"type": "number"}}},
            },
        },
    },
    "type": "object",
    "required": ["potential", "mu"],
    "additionalProperties": False,
    "properties": {
        "potential": {"$ref": "#/$defs/potential"},
        "mu": {"type": "number", "exclusiveMinimum": 0},
        "delta": {"type": "number", "exclusiveMinimum": 0},
        "N": {"type": "array", "minItems": 1,
              "items": {"type": "integer", "minimum": 1}},
        "f": {"type": "object", "required": ["terms"],
              "additionalProperties": False,
              "properties": {"terms": {"type": "array",
                                       "items": _TERM_SCHEMA}}},
        "quadrature": {"type": "object", "additionalProperties": False,
                       "properties": {"n_r": {"type": "integer",
                                              "minimum": 8},
                                      "n_theta": {"type": "integer",
                                                  "minimum": 8}}},
        "sampler": {"type": "object", "additionalProperties": False,
                    "properties": {"seed": {"type": "integer", "minimum": 0},
                                   "n_samples": {"type": "integer",
                                                 "minimum": 1},
                                   "proposal_radius": {"type": "number"},
                                   "max_rejections": {"type": "integer",
                                                      "minimum": 1}}},
        "szego": {"type": "object", "additionalProperties": False,
                  "properties": {"f_hat": {"type": "array",
                                           "items": {"type": "number"}},
                                 "n_list": {"type": "array",
                                            "items": {"type": "integer",
                                                      "minimum": 2}}}},
        "edge": {"type": "object", "additionalProperties": False,
                 "properties": {"n_levels": {"type": "integer",
                                             "minimum": 3},
                                "kappa": {"type": "integer", "minimum": 1},
                                "times": {"type": "array",
                                          "items": {"type": "number"}}}},
        "output_dir": {"type": "string"},
        "suite": {"type": "string"},
    },
}

DEFAULTS = {
    "delta": 0.5,
    "N": [32, 64, 128],
    "f": {"terms": [{"atom": "ReZ", "coeff": 1.0}]},
    "quadrature": {},
    "sampler": {"seed": 0, "n_samples": 1000},
    "szego": {"f_hat": [0.0, 0.5], "n_list": [64, 128, 256, 512]},
    "edge": {"n_levels": 17, "kappa": 2, "times": [0.5, 1.0, 2.0]},
    "output_dir": "btdpp-out",
    "suite": "full",
}


def load_config(path):
    """Parse + schema-validate + fill defaults.  Raises ConfigError."""
    import jsonschema

    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}")
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as e:
        loc = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"config schema violation at {loc}: {e.message}")
    cfg = dict(DEFAULTS)
    cfg.update(raw)
    for key in ("quadrature", "sampler", "szego", "edge"):
        merged = dict(DEFAULTS[key])
        merged.update(raw.get(key, {}))
        cfg[key] = merged
    return cfg


class ConfigError(Exception):
    pass


def config_digest(cfg):
    return hashlib.sha256(
        json.dumps(cfg, sort_keys=True).encode()).hexdigest()


def provenance(cfg, seed, subcommand):
    from . import __version__

    return {"subcommand": subcommand, "config_sha256": config_digest(cfg),
            "seed": seed, "version": __version__}


class Emitter:
    """Deterministic artifact writer: CSV bodies + JSON with provenance."""

    def __init__(self, out_dir, cfg, seed, subcommand):
        self.out_dir = out_dir
        self.head = provenance(cfg, seed, subcommand)
        os.makedirs(out_dir, exist_ok=True)
        self.written = []

    def _fmt(self, v):
        if isinstance(v, float):
            return FLOAT_FMT % v
        return str(v)

    def csv(self, name, header, rows):
        import datetime

        path = os.path.join(self.out_dir, name)
        body = ",".join(header) + "\n"
        body += "".join(",".join(self._fmt(v) for v in row) + "\n"
                        for row in rows)
        with open(path, "w") as fh:
            fh.write(body)
        meta = dict(self.head)
        meta["written_utc"] = datetime.datetime.now(
            datetime.timezone.utc).isoformat()
        with open(path + ".meta.json", "w") as fh:
            json.dump(meta, fh, indent=1, sort_keys=True)
        self.written.append(path)
        return path

    def json(self, name, payload):
        path = os.path.join(self.out_dir, name)
        doc = {"provenance": self.head, "data": payload}
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True, default=_jsonify)
        self.written.append(path)
        return path


def _jsonify(x):
    import numpy as np

    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(f"not JSON-serializable: {type(x)}")


# ---------------------------------------------------------------------------
# subcommand bodies (lazy imports throughout)
# ---------------------------------------------------------------------------

def _context(cfg):
    import copy

    from . import potential, statistic

    V = potential.parse_potential(cfg["potential"])
    f_spec = copy.deepcopy(cfg["f"])
    for term in f_spec["terms"]:
        # band-localized atoms inherit the experiment geometry by default
        if term["atom"] == "AngularWindow":
            term.setdefault("potential", cfg["potential"])
            term.setdefault("mu", cfg["mu"])
    f = statistic.test_function_from_spec(f_spec)
    quad = cfg["quadrature"]
    return V, f, quad.get("n_r"), quad.get("n_theta")


def _projector(cfg, V, N):
    from . import operator

    return operator.spectral_projector(V, cfg["mu"], cfg["delta"], N)


def cmd_spectrum(cfg, em):
    from . import quadrature

    V, f, n_r, n_theta = _context(cfg)
    area = quadrature.droplet_integral(V, cfg["mu"])
    summary = []
    for N in cfg["N"]:
        sd = _projector(cfg, V, N)
        em.csv(f"eigenvalues_N{N}.csv", ["k", "eigenvalue"],
               list(enumerate(sd.eigenvalues.tolist())))
        summary.append({"N": N, "n_mu": sd.n_mu,
                        "weyl_ratio": sd.n_mu / (N * area),
                        "droplet_measure": area})
    em.json("spectrum_summary.json", summary)
    return 0


def cmd_decay(cfg, em):
    from . import operator

    V, f, n_r, n_theta = _context(cfg)
    rows = []
    for N in cfg["N"]:
        sd = _projector(cfg, V, N)
        kf = operator.KernelField(sd)
        bulk, forb = operator.probe_rings(V, cfg["mu"], cfg["delta"])
        d = operator.decay_diagnostics(kf, bulk, forb)
        rows.append((N, d["sup_forbidden"], d["sup_bulk_gap"]))
    em.csv("decay.csv", ["N", "sup_forbidden", "sup_bulk_gap"], rows)
    return 0


def cmd_flow(cfg, em):
    import numpy as np

    from . import flow

    V, f, n_r, n_theta = _context(cfg)
    orbit = flow.integrate_flow(V, level=cfg["mu"])
    em.csv("orbit.csv", ["t", "re_z", "im_z"],
           [(t, z.real, z.imag)
            for t, z in zip(orbit.times.tolist(), orbit.samples.tolist())])
    coeffs = flow.fourier_along_flow(lambda z: f.eval(z), orbit)
    n = coeffs.size
    ms = list(range(-(min(32, n // 2)), min(32, n // 2) + 1))
    em.csv("flow_modes.csv", ["m", "re_fhat", "im_fhat"],
           [(m, coeffs[m % n].real, coeffs[m % n].imag) for m in ms])
    em.json("flow_summary.json", {
        "level": cfg["mu"], "period": orbit.period,
        "closure": orbit.closure, "energy_drift": orbit.energy_drift})
    return 0


def cmd_predict(cfg, em):
    from . import flow, statistic

    V, f, n_r, n_theta = _context(cfg)
    curve = flow.integrate_flow(V, level=cfg["mu"])
    s1 = statistic.sigma1_boundary(curve, f)
    s2 = statistic.sigma2_bulk(V, cfg["mu"], f)
    em.json("predictions.json", {
        "sigma1": s1, "sigma2": s2, "sigma": s1 + s2,
        "half_sigma": 0.5 * (s1 + s2),
        "limit_variance": s1 + 0.5 * s2,
        "limit_upsilon": 0.5 * s1 + 0.25 * s2})
    return 0


def cmd_laplace(cfg, em):
    from . import statistic

    V, f, n_r, n_theta = _context(cfg)
    rows = []
    for N in cfg["N"]:
        sd = _projector(cfg, V, N)
        ups = statistic.laplace_functional(sd, f, n_r, n_theta)
        var = statistic.variance_linear_statistic(sd, f, n_r=n_r,
                                                  n_theta=n_theta)
        rows.append((N, sd.n_mu, ups, var))
    em.csv("laplace.csv", ["N", "n_mu", "upsilon", "variance"], rows)
    return 0


def cmd_clt_sweep(cfg, em):
    from . import statistic

    V, f, n_r, n_theta = _context(cfg)
    rows = statistic.clt_sweep(V, cfg["mu"], cfg["delta"], f, cfg["N"])
    em.csv("clt_sweep.csv", ["N", "upsilon", "half_sigma", "defect"],
           [(r["N"], r["upsilon"], r["half_sigma"], r["defect"])
            for r in rows])
    return 0


def cmd_edge(cfg, em):
    from . import flow, statistic, toeplitz

    V, f, n_r, n_theta = _context(cfg)
    try:
        toeplitz.verify_edge_support(V, f, cfg["mu"], cfg["delta"])
    except ValueError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    sym = toeplitz.edge_symbol(V, f, cfg["mu"], cfg["delta"],
                               n_levels=cfg["edge"]["n_levels"])
    curve = flow.integrate_flow(V, level=cfg["mu"])
    rows = []
    reports = {}
    for N in cfg["N"]:
        sd = _projector(cfg, V, N)
        res = toeplitz.edge_clt(sd, V, f, symbol=sym, curve=curve,
                                n_r=n_r, n_theta=n_theta)
        ew = res["window"]
        cond = toeplitz.edge_conditions_check(ew)
        td = toeplitz.toeplitz_defect(ew, kappa=cfg["edge"]["kappa"])
        eps, C = toeplitz.measured_constants(cond)
        rep = toeplitz.replacement_bound_check(ew.A, ew.B, ew.pi,
                                               cfg["edge"]["times"], eps, C)
        rows.append((N, cond["norm_comm"], cond["trace_pBq"],
                     cond["trace_pDq"], cond["trace_mixed"],
                     res["gamma"], res["half_sigma1"], res["trace_term"],
                     res["half_sigma2"], res["upsilon"],
                     res["assembly_defect"]))
        reports[str(N)] = {"toeplitz_C_est": td["C_est"],
                           "conditions": cond,
                           "replacement": {"holds": rep["holds"],
                                           "rows": rep["rows"]}}
    em.csv("edge_sweep.csv",
           ["N", "norm_comm", "trace_pBq", "trace_pDq", "trace_mixed",
            "gamma", "half_sigma1", "trace_term", "half_sigma2",
            "upsilon", "assembly_defect"], rows)
    em.json("edge_reports.json", reports)
    return 0


def cmd_szego(cfg, em):
    from . import toeplitz

    f_hat = cfg["szego"]["f_hat"]
    target = sum(k * abs(c) ** 2 for k, c in enumerate(f_hat))
    rows = []
    for n in cfg["szego"]["n_list"]:
        ld, fo, const = toeplitz.szego_asymptotics(f_hat, n)
        rows.append((n, ld, fo, const, abs(const - target)))
    em.csv("szego.csv",
           ["n", "logdet", "first_order", "szego_constant", "defect"], rows)
    return 0


def cmd_sample(cfg, em, seed_override=None):
    import numpy as np

    from . import sampler, statistic

    V, f, n_r, n_theta = _context(cfg)
    sc = dict(cfg["sampler"])
    if seed_override is not None:
        sc["seed"] = seed_override
    scfg = sampler.SamplerConfig(
        seed=sc["seed"], n_samples=sc["n_samples"],
        proposal_radius=sc.get("proposal_radius", 0.0),
        max_rejections=sc.get("max_rejections", 50000))
    N = cfg["N"][0]
    sd = _projector(cfg, V, N)
    samples = sampler.draw_samples(sd, scfg)
    rows = []
    for s in samples:
        sid = s.provenance[1]
        rows.extend((sid, z.real, z.imag) for z in s.points.tolist())
    em.csv("points.csv", ["sample_id", "re", "im"], rows)
    payload = {"N": N, "n_mu": sd.n_mu, "n_samples": scfg.n_samples}
    if scfg.n_samples >= 1000:
        est = sampler.empirical_statistics(samples, f)
        exact_mean = statistic.mean_linear_statistic(sd, f)
        exact_var = statistic.variance_linear_statistic(sd, f)
        payload["statistics"] = {
            k: v for k, v in est.items() if k != "n_samples"}
        payload["exact"] = {"mean": exact_mean, "variance": exact_var}
    em.json("sample_summary.json", payload)
    return 0


def cmd_verify(cfg, em):
    from . import acceptance

    results = acceptance.run_suite(cfg["suite"])
    failed = 0
    for r in results:
        line = f"{'PASS' if r['passed'] else 'FAIL'} {r['name']}: {r['details']}"
        print(line)
        failed += 0 if r["passed"] else 1
    em.json("verify.json", results)
    if failed:
        print(f"{failed} criterion(s) failed")
        return 1
    return 0


_COMMANDS = {
    "spectrum": cmd_spectrum,
    "decay": cmd_decay,
    "flow": cmd_flow,
    "predict": cmd_predict,
    "laplace": cmd_laplace,
    "clt-sweep": cmd_clt_sweep,
    "edge": cmd_edge,
    "szego": cmd_szego,
    "sample": cmd_sample,
    "verify": cmd_verify,
}


def build_parser():
    p = argparse.ArgumentParser(
        prog="btdpp",
        description="spectral projectors of planar Berezin-Toeplitz "
                    "operators and their determinantal statistics")
    p.add_argument("subcommand", choices=sorted(_COMMANDS))
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--seed", type=int, default=None,
                   help="override sampler seed")
    p.add_argument("--threads", type=int, default=None,
                   help="BLAS/OpenMP thread cap (set before numpy loads)")
    p.add_argument("--suite", default=None,
                   help="acceptance suite name for verify")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    try:
        cfg = load_config(args.config)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    if args.suite is not None:
        cfg["suite"] = args.suite
    if args.seed is not None:
        cfg["sampler"]["seed"] = args.seed
    out_dir = args.out or cfg["output_dir"]
    seed = cfg["sampler"]["seed"]
    em = Emitter(out_dir, cfg, seed, args.subcommand)
    fn = _COMMANDS[args.subcommand]
    return fn(cfg, em)


if __name__ == "__main__":
    sys.exit(main())
