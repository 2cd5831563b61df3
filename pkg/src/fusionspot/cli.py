"""Command-line driver: ``fusionspot gen|recognize|retrieve|ingest``.

Every verb takes ``--config`` (a JSON file or a shipped preset name) and an
optional ``--seed`` override. The corpus directory and the reports live in the
config's ``output_dir``.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

import click

from . import experiment as ex
from .config import PRESETS, ConfigError, ExperimentConfig, load_config
from .core import StoreFormatError
from .phoc import PhocError


def _load(config: str, seed: int | None) -> ExperimentConfig:
    return load_config(config).with_overrides(seed=seed)


def _run(fn):
    """Turn expected failures into a one-line message and exit status 1."""
    try:
        return fn()
    except (ConfigError, ex.CorpusError, PhocError, StoreFormatError, OSError, ValueError) as exc:
        raise click.ClickException(str(exc)) from None


config_option = click.option(
    "--config", "config", required=True,
    help=f"JSON config path or preset name ({', '.join(PRESETS)}).",
)
seed_option = click.option("--seed", type=int, default=None, help="Override the config seed.")


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress.")
def main(verbose: bool) -> None:
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


def _save_config(cfg: ExperimentConfig, out: Path) -> None:
    with ex.atomic_write(out / "config.json") as fh:
        fh.write(json.dumps(cfg.to_json(), ensure_ascii=False, indent=2, sort_keys=True) + "\n")


@main.command()
@config_option
@seed_option
def gen(config: str, seed: int | None) -> None:
    """Generate a synthetic corpus into output_dir."""
    def go():
        cfg = _load(config, seed)
        out = ex.ensure_dir(cfg.output_dir)
        data = ex.generate(cfg)
        ex.write_corpus(data, out)
        _save_config(cfg, out)
        click.echo(f"wrote {len(data)} records to {out}")
    _run(go)


def _corpus(cfg: ExperimentConfig) -> ex.CorpusData:
    d = Path(cfg.output_dir)
    if not d.is_dir():
        raise ex.CorpusError(f"corpus directory not found: {d} (run gen or ingest first)")
    return ex.load_corpus(d, cfg.lexicon_path)


@main.command()
@config_option
@seed_option
def recognize(config: str, seed: int | None) -> None:
    """Write recognition.csv and topk_accuracy.csv."""
    def go():
        cfg = _load(config, seed)
        data = _corpus(cfg)
        rows, topk = ex.evaluate_recognition(data, cfg)
        out = Path(cfg.output_dir)
        ex.write_csv(out / ex.RECOGNITION_REPORT, ex.RECOGNITION_COLUMNS, rows)
        ex.write_csv(out / ex.TOPK_REPORT, ex.TOPK_COLUMNS, topk)
        click.echo(f"wrote {out / ex.RECOGNITION_REPORT} and {out / ex.TOPK_REPORT}")
    _run(go)


@main.command()
@config_option
@seed_option
@click.option("--dump-ap", is_flag=True, help="Also write per-query AP as JSON Lines.")
def retrieve(config: str, seed: int | None, dump_ap: bool) -> None:
    """Write retrieval.csv."""
    def go():
        cfg = _load(config, seed)
        data = _corpus(cfg)
        rows, per_query = ex.evaluate_retrieval(data, cfg)
        out = Path(cfg.output_dir)
        ex.write_csv(out / ex.RETRIEVAL_REPORT, ex.RETRIEVAL_COLUMNS, rows)
        if dump_ap:
            ex.write_jsonl(out / ex.AP_DUMP, per_query)
        click.echo(f"wrote {out / ex.RETRIEVAL_REPORT}")
    _run(go)


@main.command()
@config_option
@seed_option
@click.option("--manifest", required=True, type=click.Path(), help="Manifest JSONL {id, truth}.")
@click.option("--hyps", "hyps", required=True, multiple=True, type=click.Path(),
              help="Hypothesis JSONL; repeat for several K. K comes from a hyps_K<k> name or the longest list.")
@click.option("--e-w", "e_w", required=True, type=click.Path(), help="Word-image embedding store.")
@click.option("--e-n", "e_n", required=True, type=click.Path(), help="Recognizer-output embedding store.")
@click.option("--phoc", "phoc", default=None, type=click.Path(), help="PHOC config JSON.")
@click.option("--lexicon", default=None, type=click.Path(), help="Lexicon, one word per line.")
def ingest(config, seed, manifest, hyps, e_w, e_n, phoc, lexicon) -> None:
    """Validate external files and place them in output_dir."""
    def go():
        cfg = _load(config, seed)
        data = ex.ingest(manifest, list(hyps), e_w, e_n, cfg.output_dir, phoc, lexicon)
        _save_config(cfg, Path(cfg.output_dir))
        click.echo(f"ingested {len(data)} records into {cfg.output_dir}")
    _run(go)


if __name__ == "__main__":
    main()
