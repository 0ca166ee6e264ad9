"""Command-line client for the service.

Every subcommand speaks the HTTP API. By default an in-process application
is used (no socket, nothing to start first); pass ``--server URL`` to target
a running ``sea serve`` instead.
"""

from __future__ import annotations

import json
import sys
from typing import Optional

import click
import httpx

from .service import ServiceSettings, create_app


def _client(server: Optional[str], settings: ServiceSettings) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server.rstrip("/"), timeout=120.0)
    # drive an in-process app through the same HTTP surface a live server has
    from fastapi.testclient import TestClient

    return TestClient(create_app(settings),
                      raise_server_exceptions=False)


def _check(resp: httpx.Response) -> dict:
    payload = resp.json()
    if resp.status_code >= 400:
        code = payload.get("code", resp.status_code)
        raise click.ClickException(f"{code}: {payload.get('message', payload)}")
    return payload


def _canonical_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False)


server_option = click.option(
    "--server", default=None,
    help="Base URL of a running service; default runs in-process.")
corpus_option = click.option(
    "--corpus", default=None, type=click.Path(),
    help="Document snapshot JSONL backing retrieval.")


@click.group()
def main():
    """Search-engine-augmented dialogue toolkit."""


@main.group()
def index():
    """Dense index maintenance."""


@index.command("build")
@click.option("--corpus", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--dims", default=4096, show_default=True)
@server_option
def index_build(corpus: str, out: str, dims: int, server: Optional[str]):
    """Embed every 100-word chunk of the corpus into a dense index."""
    with _client(server, ServiceSettings()) as client:
        payload = _check(client.post("/api/index/build", json={
            "corpus": corpus, "out": out, "dims": dims}))
    click.echo(f"indexed {payload['count']} chunks "
               f"({payload['embedder_id']}) -> {payload['out']}")


GENERATION_KEYS = ("beam_size", "min_len", "block_ngram", "max_len", "seed")
GENERATION_DEFAULTS = {"beam_size": 3, "min_len": 20, "block_ngram": 3,
                       "max_len": 40, "seed": 0}


def _resolve_generation(config_path: Optional[str], **flags) -> dict:
    """Flags win over config-file keys, which win over the defaults."""
    from_file: dict = {}
    if config_path:
        with open(config_path, encoding="utf-8") as fh:
            from_file = json.load(fh)
        unknown = set(from_file) - set(GENERATION_KEYS)
        if unknown:
            raise click.ClickException(
                f"unknown config keys: {sorted(unknown)}")
    out = {}
    for key in GENERATION_KEYS:
        if flags.get(key) is not None:
            out[key] = flags[key]
        elif key in from_file:
            out[key] = int(from_file[key])
        else:
            out[key] = GENERATION_DEFAULTS[key]
    return out


@main.command()
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--mode", default="engine", show_default=True,
              type=click.Choice(["none", "dense_context", "dense_query",
                                 "engine"]))
@click.option("--n-docs", default=5, show_default=True)
@click.option("--beam-size", default=None, type=int,
              help="Beam width [default: 3].")
@click.option("--min-len", default=None, type=int,
              help="Minimum response tokens [default: 20].")
@click.option("--block-ngram", default=None, type=int,
              help="Repeated n-gram size to block, 0 disables [default: 3].")
@click.option("--max-len", default=None, type=int,
              help="Maximum response tokens [default: 40].")
@click.option("--seed", default=None, type=int,
              help="Decode seed recorded in the report [default: 0].")
@click.option("--config", "config_path", default=None,
              type=click.Path(exists=True),
              help="JSON file with the same generation keys; flags override.")
@click.option("--workers", default=1, show_default=True,
              help="Dialogues scored in parallel.")
@click.option("--json", "as_json", is_flag=True,
              help="Emit the canonical JSON report only.")
@corpus_option
@server_option
def eval(data: str, mode: str, n_docs: int, beam_size: Optional[int],
         min_len: Optional[int], block_ngram: Optional[int],
         max_len: Optional[int], seed: Optional[int],
         config_path: Optional[str], workers: int, as_json: bool,
         corpus: Optional[str], server: Optional[str]):
    """Generate a response for every wizard turn and score it."""
    generation = _resolve_generation(
        config_path, beam_size=beam_size, min_len=min_len,
        block_ngram=block_ngram, max_len=max_len, seed=seed)
    settings = ServiceSettings(corpus_path=corpus)
    with _client(server, settings) as client:
        payload = _check(client.post("/api/eval", json={
            "data": data, "mode": mode, "n_docs": n_docs,
            "workers": workers, **generation}))
    if as_json:
        click.echo(_canonical_json(payload))
        return
    metrics = payload["metrics"]
    ppl = f"{metrics['ppl']:.2f}" if metrics["ppl"] is not None else "-"
    click.echo(f"mode={mode}  n={metrics['n_examples']}")
    click.echo(f"{'PPL':>8} {'F1':>8} {'KF1':>8}")
    click.echo(f"{ppl:>8} {100 * metrics['f1']:>8.1f} "
               f"{100 * metrics['kf1']:>8.1f}")


@main.command()
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--json", "as_json", is_flag=True)
@server_option
def stats(data: str, as_json: bool, server: Optional[str]):
    """Dataset statistics in the usual table layout."""
    with _client(server, ServiceSettings()) as client:
        payload = _check(client.post("/api/stats", json={"data": data}))
    if as_json:
        click.echo(_canonical_json(payload["stats"]))
    else:
        click.echo(payload["table"])


@main.command()
@click.option("--mode", default="engine", show_default=True,
              type=click.Choice(["none", "dense_context", "dense_query",
                                 "engine"]))
@click.option("--seed", default=0, show_default=True)
@corpus_option
@server_option
def chat(mode: str, seed: int, corpus: Optional[str], server: Optional[str]):
    """Terminal REPL against the wizard pipeline."""
    settings = ServiceSettings(corpus_path=corpus, retrieval_mode=mode,
                               seed=seed)
    with _client(server, settings) as client:
        created = _check(client.post("/api/session", json={
            "role": "eval", "require_annotation": False, "bot_first": True,
            "turn_limit": 1000}))
        session_id = created["session_id"]
        state = created["state"]
        click.echo(f"session {session_id}  (persona: "
                   f"{'; '.join(state['persona'])})")
        for msg in state["messages"]:
            click.echo(f"[{msg['speaker']}] {msg['text']}")
        while True:
            try:
                text = click.prompt("you", prompt_suffix="> ")
            except (click.Abort, EOFError):
                click.echo("\nbye")
                return
            if text.strip() in (":q", ":quit", "exit"):
                return
            state = _check(client.post(f"/api/session/{session_id}/message",
                                       json={"text": text}))
            reply = state["messages"][-1]
            click.echo(f"[{reply['speaker']}] {reply['text']}")


@main.command()
@click.option("--bind", default="127.0.0.1:8000", show_default=True,
              help="host:port to listen on.")
@click.option("--wikipedia", default=None, type=click.Path(),
              help="Wikipedia snapshot JSONL for URL title resolution.")
@click.option("--session-log", default=None, type=click.Path(),
              help="Append-only JSONL of session events.")
@click.option("--static", "static_dir", default=None, type=click.Path(),
              help="Built workbench assets to serve under /app.")
@click.option("--mode", default="engine", show_default=True,
              type=click.Choice(["none", "dense_context", "dense_query",
                                 "engine"]))
@click.option("--engine", default="local", show_default=True,
              type=click.Choice(["local", "remote"]),
              help="Search backend; remote reads SEA_SEARCH_API_KEY.")
@click.option("--endpoint", default=None,
              help="Remote search API endpoint URL.")
@click.option("--search-cache", default=None, type=click.Path(),
              help="JSONL cache of remote search responses.")
@click.option("--k1", default=1.2, show_default=True,
              help="BM25 k1 for the local engine.")
@click.option("--b", default=0.75, show_default=True,
              help="BM25 b for the local engine.")
@click.option("--seed", default=None, type=int,
              help="Seed persona sampling for reproducible sessions.")
@corpus_option
def serve(bind: str, wikipedia: Optional[str], session_log: Optional[str],
          static_dir: Optional[str], mode: str, engine: str,
          endpoint: Optional[str], search_cache: Optional[str], k1: float,
          b: float, seed: Optional[int], corpus: Optional[str]):
    """Run the HTTP service consumed by the workbench."""
    import uvicorn

    host, _, port = bind.rpartition(":")
    if not host or not port.isdigit():
        raise click.ClickException(f"--bind must be host:port, got {bind!r}")
    settings = ServiceSettings(
        corpus_path=corpus, wikipedia_path=wikipedia, retrieval_mode=mode,
        engine=engine, remote_endpoint=endpoint,
        remote_cache_path=search_cache, k1=k1, b=b,
        session_log=session_log, static_dir=static_dir, seed=seed)
    uvicorn.run(create_app(settings), host=host, port=int(port))


if __name__ == "__main__":
    sys.exit(main())
