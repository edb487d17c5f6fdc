"""Command line entry points.

`ctmaas serve` hosts the platform; `ctmaas sim run` executes a scenario
headlessly; `ctmaas client ...` is a thin HTTP client for the common
manager/driver flows.
"""

from __future__ import annotations

import json
import sys
import threading

import click

from .config import PlatformConfig
from .platform import Platform


@click.group()
def main():
    """C-ITS fleet and traffic management platform."""


@main.command()
@click.option("--graph", "graph_path", type=click.Path(exists=True),
              help="Road graph JSON file (required unless --scenario is given).")
@click.option("--signals", "signals_path", type=click.Path(exists=True),
              help="Signal plan JSON file.")
@click.option("--config", "config_path", type=click.Path(exists=True),
              help="Platform config (TOML or JSON).")
@click.option("--gazetteer", "gazetteer_path", type=click.Path(exists=True),
              help="Address book JSON file.")
@click.option("--log", "log_path", type=click.Path(), help="Event log path (NDJSON).")
@click.option("--scenario", "scenario_path", type=click.Path(exists=True),
              help="Drive this scenario live against the server.")
@click.option("--time-scale", default=1.0, show_default=True,
              help="Scenario pacing: sim seconds per wall second.")
@click.option("--frontend", "frontend_dir", type=click.Path(exists=True),
              help="Directory of dashboard static files to serve at /ui.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8080, show_default=True)
def serve(graph_path, signals_path, config_path, gazetteer_path, log_path,
          scenario_path, time_scale, frontend_dir, host, port):
    """Run the HTTP API (and optionally a live scenario behind it)."""
    import uvicorn

    from .server import create_app

    config = PlatformConfig.from_file(config_path) if config_path else PlatformConfig()
    if not scenario_path and not graph_path:
        raise click.UsageError("pass --graph, or --scenario which carries its own graph")
    if scenario_path:
        from .sim import SimEngine, load_scenario

        scenario = load_scenario(scenario_path)
        engine = SimEngine(scenario)
        # live mode shares the engine's platform so the dashboard sees the run,
        # and the API runs on the scenario clock so validities line up
        if config_path:
            engine.platform.config.auth = config.auth
        platform = engine.platform
        app = create_app(platform, now_fn=lambda: engine.now)

        def drive():
            engine.run(pace_s=scenario.dt_s / max(time_scale, 1e-6))

        threading.Thread(target=drive, daemon=True, name="scenario-driver").start()
    else:
        platform = Platform.from_files(graph_path, signals_path, config,
                                       gazetteer_path, log_path)
        app = create_app(platform)

    if frontend_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=frontend_dir, html=True), name="ui")

    uvicorn.run(app, host=host, port=port, log_level="info")


@main.group()
def sim():
    """Scenario simulation."""


@sim.command("run")
@click.argument("scenario", type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), help="Write the report JSON here.")
@click.option("--seed", type=int, default=None, help="Override the scenario seed.")
def sim_run(scenario, out_path, seed):
    """Run SCENARIO headlessly and print a summary."""
    from .sim import run_scenario

    report = run_scenario(scenario, seed=seed, out_path=out_path)
    summary = {
        "scenario": report.scenario_name,
        "seed": report.seed,
        "arrivals": report.arrivals,
        "reroutes": report.counters["reroutes"],
        "cams": report.counters["cams_emitted"],
        "published": report.counters["published"],
    }
    click.echo(json.dumps(summary, indent=2, sort_keys=True))
    if out_path:
        click.echo(f"report written to {out_path}")


# ---- thin HTTP client ----

@main.group()
@click.option("--server", default="http://127.0.0.1:8080", show_default=True,
              envvar="CTMAAS_SERVER")
@click.option("--token", envvar="CTMAAS_TOKEN", help="Bearer token (or use `client login`).")
@click.pass_context
def client(ctx, server, token):
    """Talk to a running server."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server.rstrip("/")
    ctx.obj["token"] = token


def _request(ctx, method: str, path: str, body=None, params=None):
    import httpx

    headers = {}
    if ctx.obj.get("token"):
        headers["Authorization"] = f"Bearer {ctx.obj['token']}"
    response = httpx.request(method, ctx.obj["server"] + path, json=body,
                             params=params, headers=headers, timeout=30.0)
    if response.status_code >= 400:
        click.echo(f"HTTP {response.status_code}: {response.text}", err=True)
        sys.exit(1)
    return response


@client.command("login")
@click.argument("user_id")
@click.argument("credential")
@click.pass_context
def client_login(ctx, user_id, credential):
    doc = _request(ctx, "POST", "/auth/login",
                   {"user_id": user_id, "credential": credential}).json()
    click.echo(doc["token"])
    click.echo(f"# export CTMAAS_TOKEN={doc['token']}", err=True)


@client.command("add-driver")
@click.argument("name")
@click.argument("phone")
@click.pass_context
def client_add_driver(ctx, name, phone):
    click.echo(_request(ctx, "POST", "/drivers", {"name": name, "phone": phone}).text)


@client.command("add-vehicle")
@click.argument("plate")
@click.argument("color")
@click.option("--driver", help="Assign this driver id right away.")
@click.pass_context
def client_add_vehicle(ctx, plate, color, driver):
    doc = _request(ctx, "POST", "/vehicles", {"plate": plate, "color": color}).json()
    if driver:
        _request(ctx, "POST", f"/vehicles/{doc['vehicle_id']}/driver",
                 {"driver_id": driver})
        doc["assigned_driver"] = driver
    click.echo(json.dumps(doc))


@client.command("create-trip")
@click.argument("vehicle_id")
@click.option("--depart", required=True, help='Address or "lat,lon".')
@click.option("--stop", "stops", multiple=True, required=True,
              help='Address or "lat,lon"; repeatable. Optional ":kind" suffix.')
@click.pass_context
def client_create_trip(ctx, vehicle_id, depart, stops):
    def parse(loc: str):
        kind = "Delivery"
        if loc.rsplit(":", 1)[-1] in ("Pickup", "Delivery", "Maintenance"):
            loc, kind = loc.rsplit(":", 1)
        if "," in loc:
            lat, lon = loc.split(",", 1)
            return {"lat": float(lat), "lon": float(lon)}, kind
        return loc, kind

    depart_loc, _ = parse(depart)
    stop_docs = []
    for s in stops:
        loc, kind = parse(s)
        stop_docs.append({"location": loc, "task_kind": kind})
    doc = _request(ctx, "POST", "/trips", {
        "vehicle_id": vehicle_id, "depart": depart_loc, "stops": stop_docs}).json()
    click.echo(json.dumps(doc, indent=2))


@client.command("trips")
@click.pass_context
def client_trips(ctx):
    click.echo(json.dumps(_request(ctx, "GET", "/trips").json(), indent=2))


@client.command("eta")
@click.argument("trip_id")
@click.pass_context
def client_eta(ctx, trip_id):
    click.echo(json.dumps(_request(ctx, "GET", f"/trips/{trip_id}/eta").json(), indent=2))


@client.command("proposals")
@click.pass_context
def client_proposals(ctx):
    click.echo(json.dumps(_request(ctx, "GET", "/proposals").json(), indent=2))


@client.command("approve")
@click.argument("proposal_id")
@click.pass_context
def client_approve(ctx, proposal_id):
    click.echo(_request(ctx, "POST", f"/proposals/{proposal_id}/approve").text)


@client.command("decline")
@click.argument("proposal_id")
@click.pass_context
def client_decline(ctx, proposal_id):
    click.echo(_request(ctx, "POST", f"/proposals/{proposal_id}/decline").text)


@client.command("stream")
@click.option("--driver", "driver_stream", is_flag=True, help="Driver advisory stream.")
@click.pass_context
def client_stream(ctx, driver_stream):
    """Print newline-delimited stream events until interrupted."""
    import httpx

    headers = {}
    if ctx.obj.get("token"):
        headers["Authorization"] = f"Bearer {ctx.obj['token']}"
    path = "/stream/driver" if driver_stream else "/stream"
    with httpx.stream("GET", ctx.obj["server"] + path, headers=headers,
                      timeout=None) as response:
        for line in response.iter_lines():
            if line:
                click.echo(line)


if __name__ == "__main__":
    main()
