#!/usr/bin/env python3
"""Render figures from corridor_rl CSV outputs.

  plot_results.py delay  OUT.png DIR [DIR ...]   quartile bands per policy (quartiles.csv)
  plot_results.py train  OUT.png DIR            episode reward with a moving average (train_log.csv)
  plot_results.py queue  OUT.png DIR [DIR ...]   mean total queue per interval, e.g. perturbed vs. plain
  plot_results.py surface OUT.png DIR           brute-force reward surface for two controlled nodes
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd


def clock(seconds):
    return [f"{int(s) // 3600:02d}:{int(s) % 3600 // 60:02d}" for s in seconds]


def label_for(d):
    return Path(d).name


def plot_delay(out, dirs):
    fig, ax = plt.subplots(figsize=(9, 4))
    for d in dirs:
        q = pd.read_csv(Path(d) / "quartiles.csv")
        name = f"{q['policy'].iloc[0]} ({label_for(d)})"
        ax.plot(q["time_s"], q["delay_median"], label=name)
        ax.fill_between(q["time_s"], q["delay_q1"], q["delay_q3"], alpha=0.25)
    ticks = q["time_s"][::4]
    ax.set_xticks(ticks, clock(ticks))
    ax.set_xlabel("interval start")
    ax.set_ylabel("average delay (s/km)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out, dpi=150)


def plot_train(out, d, window=50):
    log = pd.read_csv(Path(d) / "train_log.csv")
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(log["episode"], log["episode_reward"], alpha=0.3, label="episode")
    ax.plot(log["episode"], log["episode_reward"].rolling(window, min_periods=1).mean(), label=f"{window}-episode mean")
    ax.set_xlabel("episode")
    ax.set_ylabel("episode reward")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out, dpi=150)


def plot_queue(out, dirs):
    fig, ax = plt.subplots(figsize=(9, 4))
    for d in dirs:
        q = pd.read_csv(Path(d) / "quartiles.csv")
        ax.plot(q["time_s"], q["queue_mean"], marker=".", label=label_for(d))
    ticks = q["time_s"][::4]
    ax.set_xticks(ticks, clock(ticks))
    ax.set_xlabel("interval start")
    ax.set_ylabel("mean total queue (veh)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out, dpi=150)


def plot_surface(out, d):
    s = pd.read_csv(Path(d) / "surface.csv")
    offsets = np.array([list(map(int, o.split())) for o in s["offsets"]])
    if offsets.shape[1] != 2:
        raise SystemExit("surface plot needs exactly two controlled nodes")
    xs, ys = np.unique(offsets[:, 0]), np.unique(offsets[:, 1])
    grid = np.full((len(ys), len(xs)), np.nan)
    for (a, b), r in zip(offsets, s["reward"]):
        grid[np.searchsorted(ys, b), np.searchsorted(xs, a)] = r
    fig, ax = plt.subplots(figsize=(5, 4))
    im = ax.imshow(grid, origin="lower", extent=(xs[0], xs[-1], ys[0], ys[-1]), aspect="auto")
    fig.colorbar(im, label="mean reward")
    ax.set_xlabel("offset, node 1 (s)")
    ax.set_ylabel("offset, node 2 (s)")
    fig.tight_layout()
    fig.savefig(out, dpi=150)


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("kind", choices=["delay", "train", "queue", "surface"])
    p.add_argument("out")
    p.add_argument("dirs", nargs="+")
    a = p.parse_args()
    if a.kind == "delay":
        plot_delay(a.out, a.dirs)
    elif a.kind == "train":
        plot_train(a.out, a.dirs[0])
    elif a.kind == "queue":
        plot_queue(a.out, a.dirs)
    else:
        plot_surface(a.out, a.dirs[0])


if __name__ == "__main__":
    main()
