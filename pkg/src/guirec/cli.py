"""Command-line entry point.

Subcommands mirror the pipeline stages: ``ingest`` (events -> sessions +
catalog), ``synth`` (augment a corpus), ``train`` (fit one recurrent
model), ``eval`` (compare model files plus the kNN baseline), ``simulate``
(run generated episodes against a GUI model), ``replicate`` (the whole
experiment in one shot) and ``replay`` (re-run any previous invocation
from its manifest).

Every run writes a manifest next to its primary output.  Each subcommand
is a pure function of (input files, flags, seed), so replaying a manifest
reproduces outputs byte for byte.  A plain-text key-value file
(``key = value`` per line, ``#`` comments) can supply flag defaults via
``--config``; explicit flags win.

Exit codes: 0 success, 2 usage, 3 missing file, 4 parse/validation
error, 5 integrity error, 6 configuration error, 1 other failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .catalog import ingest_events
from .errors import (ConfigError, GuirecError, IntegrityError, ParseError, ValidationError)
from .evaluation import EvalConfig, evaluate_models, split_sessions
from .gui_sim import (GeneratorPolicy, catalog_from_gui_model, gate_pass_rate,
                      load_gui_model, mean_unique_states, run_episodes, write_episode_csv)
from .knn import KnnRecommender, fit_knn, write_similarity_csv
from .manifest import RunManifest
from .replicate import ReplicateConfig, concat_logs, run_replicate
from .rnn import NetworkConfig, RecurrentModel, RnnRecommender, train
from .session_io import (read_catalog_csv, read_events_csv, read_session_csv,
                         write_session_csv)
from .synth import (DEFAULT_LENGTH_MIX, LengthBand, SynthConfig, estimate_marginals,
                    extract_motifs, generate_sessions)


def read_config_file(path) -> dict[str, str]:
    """Parse a ``key = value`` defaults file."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for num, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"{path}: expected 'key = value'", line=num)
            key, _, value = line.partition("=")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _parse_cutoffs(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad cutoff list {text!r}") from None


def _parse_length_mix(text: str) -> list[list[float]]:
    """``weight:lo:hi,weight:lo:hi`` -> [[w, lo, hi], ...]."""
    bands = []
    try:
        for part in text.split(","):
            w, lo, hi = part.split(":")
            bands.append([float(w), int(lo), int(hi)])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad length mix {text!r}") from None
    return bands


def _bool(text: str) -> bool:
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _write_manifest(path, subcommand: str, config: dict, inputs: dict, outputs: dict,
                    seed=None) -> None:
    RunManifest(subcommand=subcommand, config=config, inputs=inputs, outputs=outputs,
                seed=seed).save(path)


def run_ingest(config: dict) -> int:
    events = read_events_csv(config["events"])
    seed_catalog = read_catalog_csv(config["catalog"]) if config.get("catalog") else None
    log = ingest_events(events, catalog=seed_catalog)
    write_session_csv(log, config["out_sessions"], config["out_catalog"])
    _write_manifest(f"{config['out_sessions']}.manifest.json", "ingest", config,
                    inputs={"events": config["events"]},
                    outputs={"sessions": config["out_sessions"],
                             "catalog": config["out_catalog"]})
    print(f"ingested {len(events)} events into {len(log.sessions)} sessions; "
          f"catalog holds {len(log.catalog)} actions")
    return 0


def run_synth(config: dict) -> int:
    log = read_session_csv(config["sessions"], config["catalog"])
    dist = estimate_marginals(log)
    motifs = extract_motifs(log, min_len=config["motif_min_len"],
                            max_len=config["motif_max_len"],
                            min_support=config["motif_min_support"])
    mix = None
    if config.get("length_mix"):
        mix = tuple(LengthBand(w, int(lo), int(hi)) for w, lo, hi in config["length_mix"])
    elif config.get("default_length_mix"):
        mix = DEFAULT_LENGTH_MIX
    synth_cfg = SynthConfig(n_sessions=config["n_sessions"],
                            length_min=config["length_min"],
                            length_max=config["length_max"],
                            motif_rate=config["motif_rate"],
                            noise_rate=config["noise_rate"],
                            seed=config["seed"], length_mix=mix)
    base_ts = (log.sessions[-1].start_timestamp + 1000) if log.sessions else 1_600_000_000
    synthetic = generate_sessions(dist, motifs, synth_cfg, log.catalog,
                                  base_timestamp=base_ts)
    out_log = synthetic if config["synthetic_only"] else concat_logs(log, synthetic)
    write_session_csv(out_log, config["out_sessions"], config["out_catalog"])
    _write_manifest(f"{config['out_sessions']}.manifest.json", "synth", config,
                    inputs={"sessions": config["sessions"], "catalog": config["catalog"]},
                    outputs={"sessions": config["out_sessions"],
                             "catalog": config["out_catalog"]},
                    seed=config["seed"])
    print(f"generated {len(synthetic.sessions)} synthetic sessions "
          f"({len(motifs)} motifs, {len(out_log.sessions)} sessions written)")
    return 0


def run_train(config: dict) -> int:
    log = read_session_csv(config["sessions"], config["catalog"])
    net_cfg = NetworkConfig(n_actions=len(log.catalog),
                            hidden_size=config["hidden_size"],
                            cell_kind=config["cell_kind"],
                            loss_kind=config["loss_kind"],
                            batch_size=config["batch_size"],
                            learning_rate=config["learning_rate"],
                            adagrad_epsilon=config["adagrad_epsilon"],
                            init_scale=config["init_scale"],
                            epochs=config["epochs"],
                            seed=config["seed"],
                            bptt_unroll=config["bptt_unroll"])
    result = train(log, net_cfg,
                   progress=lambda e, l: print(f"epoch {e}: mean loss {l:.6f}"),
                   stop_tol=config.get("stop_tol"))
    result.model.save(config["out_model"])
    if config.get("loss_trace"):
        with open(config["loss_trace"], "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["epoch", "mean_loss"])
            for epoch, value in enumerate(result.epoch_losses, start=1):
                writer.writerow([epoch, repr(value)])
    _write_manifest(f"{config['out_model']}.manifest.json", "train", config,
                    inputs={"sessions": config["sessions"], "catalog": config["catalog"]},
                    outputs={"model": config["out_model"]}, seed=config["seed"])
    converged = (f"converged at epoch {result.converged_epoch}"
                 if result.converged_epoch else "did not converge")
    print(f"trained {net_cfg.cell_kind}/{net_cfg.loss_kind} for "
          f"{len(result.epoch_losses)} epoch(s); {converged}; "
          f"skipped {result.skipped_sessions} short session(s)")
    return 0


def run_eval(config: dict) -> int:
    log = read_session_csv(config["sessions"], config["catalog"])
    eval_cfg = EvalConfig(cutoffs=tuple(config["cutoffs"]),
                          split_ratio=config["split_ratio"], seed=config["seed"],
                          relevance=config["relevance"])
    train_log, test_log = split_sessions(log, eval_cfg)
    recommenders = []
    used = set()
    for path in config["models"]:
        model = RecurrentModel.load(path)
        if model.cfg.n_actions != len(log.catalog):
            raise IntegrityError(
                f"{path}: model scores {model.cfg.n_actions} actions but the catalog "
                f"holds {len(log.catalog)}")
        name = Path(path).stem
        while name in used:
            name += "+"
        used.add(name)
        recommenders.append((name, RnnRecommender(model, name=name)))
    matrix = fit_knn(train_log)
    if config.get("similarity_out"):
        write_similarity_csv(matrix, config["similarity_out"])
    recommenders.append(("knn", KnnRecommender(matrix)))
    report = evaluate_models(recommenders, test_log, eval_cfg)
    report.write_csv(config["out_report"])
    _write_manifest(f"{config['out_report']}.manifest.json", "eval", config,
                    inputs={"sessions": config["sessions"], "catalog": config["catalog"],
                            "models": list(config["models"])},
                    outputs={"report": config["out_report"]}, seed=config["seed"])
    print(report.format_table())
    return 0


def run_simulate(config: dict) -> int:
    gui = load_gui_model(config["gui_model"])
    catalog = (read_catalog_csv(config["catalog"]) if config.get("catalog")
               else catalog_from_gui_model(gui))
    recommender = None
    if config.get("model"):
        model = RecurrentModel.load(config["model"])
        if model.cfg.n_actions != len(catalog):
            raise IntegrityError(
                f"{config['model']}: model scores {model.cfg.n_actions} actions but the "
                f"catalog holds {len(catalog)}")
        recommender = RnnRecommender(model)
    kind = config["policy"] or ("recommender_guided" if recommender else "random_monkey")
    policy = GeneratorPolicy(kind=kind, epsilon=config["epsilon"], top_k=config["top_k"],
                             max_steps=config["max_steps"], seed=config["seed"])
    stats = run_episodes(gui, recommender, policy, catalog, config["episodes"])
    write_episode_csv(stats, config["out"])
    _write_manifest(f"{config['out']}.manifest.json", "simulate", config,
                    inputs={"gui_model": config["gui_model"]},
                    outputs={"episodes": config["out"]}, seed=config["seed"])
    print(f"{kind}: {config['episodes']} episodes, gate pass rate "
          f"{gate_pass_rate(stats):.3f}, mean unique states "
          f"{mean_unique_states(stats):.2f}")
    return 0


def run_replicate_cmd(config: dict) -> int:
    rep_cfg = ReplicateConfig(out_dir=config["out_dir"], seed=config["seed"],
                              n_scripted=config["n_scripted"],
                              n_synthetic=config["n_synthetic"],
                              hidden_size=config["hidden_size"],
                              batch_size=config["batch_size"],
                              learning_rate=config["learning_rate"],
                              epochs=config["epochs"],
                              episodes=config["episodes"],
                              episode_steps=config["episode_steps"])
    run_replicate(rep_cfg)
    _write_manifest(Path(config["out_dir"]) / "manifest.json", "replicate", config,
                    inputs={}, outputs={"out_dir": config["out_dir"]},
                    seed=config["seed"])
    return 0


HANDLERS = {
    "ingest": run_ingest,
    "synth": run_synth,
    "train": run_train,
    "eval": run_eval,
    "simulate": run_simulate,
    "replicate": run_replicate_cmd,
}


def run_replay(config: dict) -> int:
    manifest = RunManifest.load(config["manifest"])
    handler = HANDLERS.get(manifest.subcommand)
    if handler is None:
        raise ConfigError(f"manifest names unknown subcommand {manifest.subcommand!r}")
    print(f"replaying {manifest.subcommand} from {config['manifest']}")
    return handler(manifest.config)


def build_parser() -> tuple[argparse.ArgumentParser, argparse._SubParsersAction]:
    parser = argparse.ArgumentParser(prog="guirec", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="events.csv -> sessions.csv + catalog.csv")
    p.add_argument("--events", required=True)
    p.add_argument("--catalog", default=None, help="existing catalog to reuse IDs from")
    p.add_argument("--out-sessions", required=True)
    p.add_argument("--out-catalog", required=True)
    p.set_defaults(func=run_ingest)

    p = sub.add_parser("synth", help="augment a session corpus with synthetic sessions")
    p.add_argument("--config", default=None, help="key = value defaults file")
    p.add_argument("--sessions", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--out-sessions", required=True)
    p.add_argument("--out-catalog", required=True)
    p.add_argument("--n-sessions", type=int, required=True)
    p.add_argument("--length-min", type=int, default=1)
    p.add_argument("--length-max", type=int, default=49)
    p.add_argument("--length-mix", type=_parse_length_mix, default=None,
                   help="weight:lo:hi[,weight:lo:hi...] length bands")
    p.add_argument("--default-length-mix", type=_bool, default=False,
                   help="use the built-in mean-14 length mixture")
    p.add_argument("--motif-rate", type=float, default=0.8)
    p.add_argument("--noise-rate", type=float, default=0.05)
    p.add_argument("--motif-min-len", type=int, default=2)
    p.add_argument("--motif-max-len", type=int, default=6)
    p.add_argument("--motif-min-support", type=int, default=2)
    p.add_argument("--synthetic-only", type=_bool, default=False,
                   help="write only the synthetic sessions, not seed + synthetic")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=run_synth)

    p = sub.add_parser("train", help="train one recurrent model on a sessions file")
    p.add_argument("--config", default=None)
    p.add_argument("--sessions", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--out-model", required=True)
    p.add_argument("--loss-trace", default=None, help="per-epoch loss CSV")
    p.add_argument("--hidden-size", type=int, default=100)
    p.add_argument("--cell-kind", choices=["gru", "lstm"], default="gru")
    p.add_argument("--loss-kind", choices=["cross_entropy", "bpr", "top1"], default="top1")
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--learning-rate", type=float, default=0.05)
    p.add_argument("--adagrad-epsilon", type=float, default=1e-6)
    p.add_argument("--init-scale", type=float, default=0.1)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--bptt-unroll", type=int, default=1)
    p.add_argument("--stop-tol", type=float, default=None,
                   help="stop when relative epoch-loss improvement drops below this")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=run_train)

    p = sub.add_parser("eval", help="evaluate model files plus the kNN baseline")
    p.add_argument("--config", default=None)
    p.add_argument("--models", nargs="+", required=True)
    p.add_argument("--sessions", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--out-report", required=True)
    p.add_argument("--cutoffs", type=_parse_cutoffs, default=[1, 5, 10, 20])
    p.add_argument("--split-ratio", type=float, default=0.8)
    p.add_argument("--relevance", choices=["next", "remaining"], default="next")
    p.add_argument("--similarity-out", default=None,
                   help="dump the kNN similarity matrix as CSV")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=run_eval)

    p = sub.add_parser("simulate", help="run generated episodes against a GUI model")
    p.add_argument("--config", default=None)
    p.add_argument("--gui-model", required=True)
    p.add_argument("--catalog", default=None,
                   help="catalog file; defaults to one derived from the GUI model")
    p.add_argument("--model", default=None, help="trained model for guided generation")
    p.add_argument("--policy", choices=["random_monkey", "recommender_guided"],
                   default=None)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--max-steps", type=int, default=30)
    p.add_argument("--episodes", type=int, default=100)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=run_simulate)

    p = sub.add_parser("replicate", help="run the whole experiment pipeline")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--n-scripted", type=int, default=50)
    p.add_argument("--n-synthetic", type=int, default=3476)
    p.add_argument("--hidden-size", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--epochs", type=int, default=25)
    p.add_argument("--episodes", type=int, default=100)
    p.add_argument("--episode-steps", type=int, default=30)
    p.set_defaults(func=run_replicate_cmd)

    p = sub.add_parser("replay", help="re-run a previous invocation from its manifest")
    p.add_argument("manifest")
    p.set_defaults(func=run_replay)

    return parser, sub


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, sub = build_parser()
    command = next((a for a in argv if not a.startswith("-")), None)
    if "--config" in argv and command in sub.choices:
        path = argv[argv.index("--config") + 1]
        file_values = read_config_file(path)
        subparser = sub.choices[command]
        for action in subparser._actions:
            if action.dest in file_values:
                raw = file_values[action.dest]
                converted = action.type(raw) if action.type else raw
                subparser.set_defaults(**{action.dest: converted})

    args = parser.parse_args(argv)
    config = {k: v for k, v in vars(args).items() if k not in ("command", "func", "config")}
    try:
        return args.func(config)
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc.filename or exc}", file=sys.stderr)
        return 3
    except (ParseError, ValidationError) as exc:
        print(f"error: invalid input: {exc}", file=sys.stderr)
        return 4
    except IntegrityError as exc:
        print(f"error: integrity: {exc}", file=sys.stderr)
        return 5
    except ConfigError as exc:
        print(f"error: configuration: {exc}", file=sys.stderr)
        return 6
    except GuirecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
