"""Command-line entry point: ``idea {generate,train,complete,evaluate}``.

Exit codes: 0 on success, 2 for input or configuration errors, 3 for
numerical failures such as a diverging training run.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

from .errors import IdeaError, InputError, NumericalError

log = logging.getLogger("idea")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
DATA_FILES = ("library_a.jsonl", "library_b.jsonl", "anchor_links.jsonl", "dictionary.tsv", "manifest.json")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _load_data(data_dir: Path):
    from .datamodel import load_anchor_links, load_library

    lib_a = load_library(data_dir / "library_a.jsonl")
    lib_b = load_library(data_dir / "library_b.jsonl")
    links = load_anchor_links(data_dir / "anchor_links.jsonl", lib_a, lib_b)
    return lib_a, lib_b, links


def cmd_generate(args) -> int:
    from .baselines import save_dictionary
    from .config import load_config
    from .datamodel import save_anchor_links, save_library
    from .synthgen import generate_pair

    cfg = load_config(args.config).synth()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lib_a, lib_b, links, dictionary = generate_pair(cfg)
    save_library(lib_a, out / "library_a.jsonl")
    save_library(lib_b, out / "library_b.jsonl")
    save_anchor_links(links, out / "anchor_links.jsonl")
    save_dictionary(dictionary, out / "dictionary.tsv")
    manifest = {
        "synth": cfg.to_dict(),
        "counts": {"movies_a": len(lib_a), "movies_b": len(lib_b), "anchor_links": len(links),
                   "dictionary": len(dictionary)},
        "sha256": {name: _sha256(out / name) for name in DATA_FILES[:4]},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    log.info("wrote %s", ", ".join(DATA_FILES))
    return EXIT_OK


def _rank_models(Y_a, Y_b, lib_a, lib_b, links, seed):
    from .ranking import CRITERIA, compute_rank_targets, train_rank_model

    models = {}
    for kind in sorted(CRITERIA):
        tgt_a, tgt_b = compute_rank_targets(lib_a, kind), compute_rank_targets(lib_b, kind)
        models[f"{kind}:a"] = train_rank_model(Y_b, tgt_a, links.b_to_a(), kind, seed=seed,
                                               source_side="b", target_side="a").to_json()
        models[f"{kind}:b"] = train_rank_model(Y_a, tgt_b, links.a_to_b(), kind, seed=seed,
                                               source_side="a", target_side="b").to_json()
    return models


def cmd_train(args) -> int:
    import dataclasses

    from .autoenc import SideFeatures, encode, load_checkpoint, save_checkpoint, train
    from .config import load_config
    from .evaluation import sample_negatives
    from .features import build_vocabulary, feature_matrix

    run = load_config(args.config)
    hp, spec = run.hyperparams(), run.features()
    lib_a, lib_b, links = _load_data(Path(args.data))
    out = Path(args.out)
    params, start, history = None, 0, []
    if args.resume and out.exists():
        ck = load_checkpoint(out)
        old = dataclasses.replace(ck["hp"], epochs=hp.epochs)
        if old != hp:
            raise InputError("checkpoint hyperparameters differ from the config (only 'epochs' may change on resume)")
        params, start = ck["params"], int(ck["epochs_completed"])
        history = list(ck.get("loss_history", []))
        from .features import Vocabulary

        vocab_a, vocab_b = Vocabulary.from_json(ck["vocab_a"]), Vocabulary.from_json(ck["vocab_b"])
        log.info("resuming from epoch %d", start)
    else:
        vocab_a, vocab_b = build_vocabulary(lib_a, spec), build_vocabulary(lib_b, spec)
    Xa, Ma = feature_matrix(lib_a.movies, vocab_a)
    Xb, Mb = feature_matrix(lib_b.movies, vocab_b)
    fa, fb = SideFeatures(lib_a.ids, Xa, Ma), SideFeatures(lib_b.ids, Xb, Mb)
    pairs = sample_negatives(links, lib_a, lib_b, hp.seed)
    try:
        params, report = train(fa, fb, pairs, hp, params=params, start_epoch=start)
    except NumericalError as exc:
        log.error("%s", exc)
        return EXIT_NUMERIC
    history += [list(r) for r in report.rows()]
    Y_a = dict(zip(lib_a.ids, encode(Xa, params, "a")))
    Y_b = dict(zip(lib_b.ids, encode(Xb, params, "b")))
    out.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out, params, hp, start + hp.epochs,
                    vocab_a=vocab_a.to_json(), vocab_b=vocab_b.to_json(),
                    libraries=[lib_a.library_id, lib_b.library_id],
                    loss_history=history,
                    rank_models=_rank_models(Y_a, Y_b, lib_a, lib_b, links, hp.seed))
    lines = ["epoch,L_e,alpha_L_f,beta_L_reg,L"] + [",".join([str(int(r[0]))] + [repr(float(v)) for v in r[1:]])
                                                  for r in history]
    loss_path = out.with_suffix(".loss.csv")
    loss_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    log.info("trained to epoch %d; final loss %.6g; wrote %s and %s", start + hp.epochs,
             history[-1][-1] if history else float("nan"), out, loss_path)
    return EXIT_OK


def cmd_complete(args) -> int:
    from .autoenc import load_checkpoint
    from .datamodel import load_library
    from .features import Vocabulary
    from .fusion import embed_library, identify_missing, infer_anchor_links
    from .ranking import RankModel, rank_missing, write_completions

    ck = load_checkpoint(args.checkpoint)
    for key in ("vocab_a", "vocab_b", "rank_models"):
        if key not in ck:
            raise InputError(f"checkpoint field {key!r} is missing")
    try:
        vocab_a, vocab_b = Vocabulary.from_json(ck["vocab_a"]), Vocabulary.from_json(ck["vocab_b"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"checkpoint field 'vocab_a'/'vocab_b' is invalid: {exc}") from None
    data = Path(args.data)
    lib_a = load_library(data / "library_a.jsonl")
    lib_b = load_library(data / "library_b.jsonl")
    params = ck["params"]
    eta = args.eta if args.eta is not None else ck["hp"].eta
    try:
        models = {s: RankModel.from_json(ck["rank_models"][f"{args.criterion}:{s}"]) for s in ("a", "b")}
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"checkpoint field 'rank_models' is invalid: {exc}") from None
    Y_a = embed_library(lib_a, vocab_a, params, "a")
    Y_b = embed_library(lib_b, vocab_b, params, "b")
    inferred = infer_anchor_links(lib_a, lib_b, params, eta, args.mode, Y_a=Y_a, Y_b=Y_b)
    report = identify_missing(lib_a, lib_b, inferred, args.mode, eta)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report.save(out / "missing_report.json")
    latents = {"a": dict(zip(lib_a.ids, Y_a)), "b": dict(zip(lib_b.ids, Y_b))}
    lists = rank_missing(report, latents, models, (lib_a.library_id, lib_b.library_id))
    for name, rows in sorted(lists.items()):
        write_completions(rows, out / f"completion_{name}.csv")
    log.info("%d inferred links; %d missing from %s, %d missing from %s", len(inferred),
             len(report.missing_for_a), lib_a.library_id, len(report.missing_for_b), lib_b.library_id)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    import dataclasses

    from .baselines import load_dictionary
    from .config import load_config
    from .evaluation import run_experiment, write_reports

    run = load_config(args.config)
    hp, spec, cfgs = run.hyperparams(), run.features(), run.experiments()
    data = Path(args.data)
    lib_a, lib_b, links = _load_data(data)
    dictionary = load_dictionary(data / "dictionary.tsv") if (data / "dictionary.tsv").exists() else None
    if args.baselines_only:
        if dictionary is None:
            raise InputError(f"--baselines-only needs {data / 'dictionary.tsv'}")
        cfgs = [dataclasses.replace(c, baselines_only=True) for c in cfgs]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reports = []
    try:
        for cfg in cfgs:
            res = run_experiment(lib_a, lib_b, links, cfg, hp, spec, dictionary, run_dir=out / "runs")
            reports += res.reports
    except NumericalError as exc:
        log.error("%s", exc)
        return EXIT_NUMERIC
    meta = {"train": hp.to_dict(), "features": spec.to_dict(), "eval": [c.to_dict() for c in cfgs]}
    write_reports(reports, out / "report.json", out / "report.csv", meta)
    log.info("wrote %d report rows to %s", len(reports), out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="idea", description="Find and rank movies missing across two aligned libraries.")
    p.add_argument("--workdir", default=".", help="base directory for every relative path (default: .)")
    p.add_argument("--threads", type=int, default=None,
                   help="BLAS thread limit (default: available cores; IDEA_THREADS overrides)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic library pair with ground truth")
    g.add_argument("--config", required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="train the coupled autoencoders and rank models")
    t.add_argument("--config", required=True)
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True, help="checkpoint path; losses go to <stem>.loss.csv")
    t.add_argument("--resume", action="store_true", help="continue from an existing checkpoint at --out")
    t.set_defaults(func=cmd_train)

    c = sub.add_parser("complete", help="infer anchor links and rank the missing movies")
    c.add_argument("--checkpoint", required=True)
    c.add_argument("--data", required=True)
    c.add_argument("--eta", type=float, default=None, help="distance threshold (default: checkpoint's eta)")
    c.add_argument("--mode", choices=("threshold", "greedy"), default="threshold")
    c.add_argument("--criterion", choices=("quality", "popularity"), default="quality")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_complete)

    e = sub.add_parser("evaluate", help="run the cross-validated protocol and write reports")
    e.add_argument("--config", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--baselines-only", action="store_true")
    e.set_defaults(func=cmd_evaluate)
    return p


def _resolve(args) -> None:
    base = Path(args.workdir)
    for name in ("config", "data", "out", "checkpoint"):
        v = getattr(args, name, None)
        if v is not None and not Path(v).is_absolute():
            setattr(args, name, str(base / v))


def _threads(args) -> int | None:
    env = os.environ.get("IDEA_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise InputError(f"IDEA_THREADS must be an integer, got {env!r}") from None
    else:
        n = args.threads
    if n is not None and n < 1:
        raise InputError("thread count must be positive")
    return n


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    logging.getLogger("idea").setLevel(logging.INFO if args.verbose else logging.WARNING)
    try:
        _resolve(args)
        n = _threads(args)
        if n is None:
            return args.func(args)
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=n):
            return args.func(args)
    except NumericalError as exc:
        print(f"idea: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (IdeaError, OSError) as exc:
        print(f"idea: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
