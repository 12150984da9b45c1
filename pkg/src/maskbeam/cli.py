"""Batch command-line front end: scene simulation, enhancement, metric
evaluation, and a built-in self-test.

All logs are line oriented with stable `key=value` fields. Every command is
deterministic under a fixed --seed.
"""

import argparse
import concurrent.futures
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import metrics
from .audio_io import read_wav, write_wav
from .nnet import MaskEstimator
from .pipeline import SpeechEnhancer
from .sim import mix_scene, sample_scene, synthetic_speech
from .sim.scene import RoomScene

SCENE_PREFIX = "scene"


def _scene_seed(master_seed, index):
    return int(np.random.SeedSequence([master_seed, index]).generate_state(1)[0])


def _parse_channels(text):
    """1-based channel labels as printed on the array diagrams."""
    labels = [int(part) for part in text.split(",") if part.strip()]
    if not labels or any(label < 1 for label in labels):
        raise argparse.ArgumentTypeError("channels must be 1-based labels, e.g. 1,7,4")
    return labels


def _load_config(path):
    if path is None:
        return {}
    with open(path) as fh:
        config = json.load(fh)
    if not isinstance(config, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return config


def _resolve(args, config, key, default):
    """Flag value if given, else config-file value, else default."""
    value = getattr(args, key, None)
    if value is not None:
        return value
    return config.get(key.replace("_", "-"), config.get(key, default))


def _utterance_id(index):
    return f"{SCENE_PREFIX}{index:04d}"


# ---------------------------------------------------------------------------
# simulate


def _simulate_one(task):
    (out_dir, index, master_seed, array_kind, duration, sample_rate, channels,
     num_directional, clean_path) = task
    out_dir = Path(out_dir)
    seed = _scene_seed(master_seed, index)
    scene = sample_scene(array_kind, seed, num_directional=num_directional)
    if channels:
        idx = [label - 1 for label in channels]
        if max(idx) >= scene.num_mics:
            raise ValueError(
                f"channel label {max(idx) + 1} exceeds array size {scene.num_mics}"
            )
        scene = RoomScene(
            room_dims=scene.room_dims,
            t60=scene.t60,
            source_pos=scene.source_pos,
            mic_positions=scene.mic_positions[idx],
            array_kind=scene.array_kind,
            noise_plan=scene.noise_plan,
            seed=scene.seed,
            sample_rate=scene.sample_rate,
        )

    num_samples = int(round(duration * sample_rate))
    if clean_path is not None:
        clean = read_wav(clean_path, expected_sample_rate=sample_rate)
        if clean.num_channels != 1:
            raise ValueError(f"{clean_path}: clean sources must be mono")
        if clean.num_samples < num_samples:
            reps = int(np.ceil(num_samples / clean.num_samples))
            clean = type(clean)(np.tile(clean.samples, (reps, 1)), sample_rate)
        clean = type(clean)(clean.samples[:num_samples], sample_rate)
    else:
        clean = synthetic_speech(num_samples, seed=seed, sample_rate=sample_rate)

    result = mix_scene(clean, scene)
    utt = _utterance_id(index)
    write_wav(out_dir / f"{utt}.mixture.wav", result.mixture)
    write_wav(out_dir / f"{utt}.early.wav", result.early_image)
    write_wav(out_dir / f"{utt}.clean.wav", clean)
    scene.save(out_dir / f"{utt}.scene.json")
    return (
        f"simulate utt={utt} seed={seed} mics={scene.num_mics} "
        f"t60={scene.t60:.3f} diffuse_rsnr_db={scene.noise_plan.diffuse_rsnr_db:.2f} "
        f"directional={len(scene.noise_plan.directional)}"
    )


def cmd_simulate(args):
    config = _load_config(args.config)
    out_dir = Path(_resolve(args, config, "out", "scenes"))
    out_dir.mkdir(parents=True, exist_ok=True)
    num_scenes = int(_resolve(args, config, "num_scenes", 10))
    array_kind = _resolve(args, config, "array", "circular7")
    seed = int(_resolve(args, config, "seed", 0))
    duration = float(_resolve(args, config, "duration", 4.0))
    sample_rate = int(_resolve(args, config, "sample_rate", 16000))
    channels = _resolve(args, config, "channels", None)
    workers = int(_resolve(args, config, "workers", 1))
    num_directional = _resolve(args, config, "directional", None)
    if num_directional is not None:
        num_directional = int(num_directional)
    clean_paths = _resolve(args, config, "clean", None)

    tasks = []
    for index in range(num_scenes):
        clean_path = None
        if clean_paths:
            clean_path = clean_paths[index % len(clean_paths)]
        tasks.append(
            (str(out_dir), index, seed, array_kind, duration, sample_rate,
             channels, num_directional, clean_path)
        )
    for line in _run_tasks(_simulate_one, tasks, workers):
        print(line)
    print(f"simulate done scenes={num_scenes} out={out_dir}")
    return 0


# ---------------------------------------------------------------------------
# enhance


def _find_utterances(in_dir):
    in_dir = Path(in_dir)
    mixtures = sorted(in_dir.glob("*.mixture.wav"))
    if not mixtures:
        raise FileNotFoundError(f"no *.mixture.wav files found in {in_dir}")
    return [path.name[: -len(".mixture.wav")] for path in mixtures]


def _enhance_one(task):
    (in_dir, out_dir, utt, mask_spec, gmin_db, ref_spec, channels) = task
    in_dir, out_dir = Path(in_dir), Path(out_dir)
    mixture = read_wav(in_dir / f"{utt}.mixture.wav")
    early = None
    if mask_spec == "oracle":
        early_path = in_dir / f"{utt}.early.wav"
        if not early_path.exists():
            raise FileNotFoundError(
                f"oracle mask requires the early image: {early_path} is missing"
            )
        early = read_wav(early_path, expected_sample_rate=mixture.sample_rate)

    if channels:
        idx = [label - 1 for label in channels]
        mixture = mixture.select_channels(idx)
        if early is not None:
            early = early.select_channels(idx)

    if mask_spec == "oracle":
        mask_source = "oracle"
    elif mask_spec.startswith("net:"):
        estimator = MaskEstimator()
        estimator.load_weights(mask_spec[len("net:"):])
        mask_source = estimator
    else:
        raise ValueError(f"unknown mask source {mask_spec!r} (use 'oracle' or 'net:PATH')")

    reference = "auto" if ref_spec == "auto" else int(ref_spec)
    enhancer = SpeechEnhancer(
        mask_source=mask_source,
        reference=reference,
        mask_floor_db=gmin_db,
    )
    enhanced, info = enhancer.enhance(mixture, early)
    write_wav(out_dir / f"{utt}.enhanced.wav", enhanced)
    return (
        f"enhance utt={utt} ref={info.reference} mask={mask_spec} "
        f"gmin_db={gmin_db:g} mask_mean={info.mask_mean:.4f}"
    )


def cmd_enhance(args):
    config = _load_config(args.config)
    in_dir = Path(_resolve(args, config, "in_dir", "scenes"))
    out_dir = Path(_resolve(args, config, "out", "enhanced"))
    out_dir.mkdir(parents=True, exist_ok=True)
    mask_spec = _resolve(args, config, "mask", "oracle")
    gmin_db = float(_resolve(args, config, "gmin_db", 0.0))
    ref_spec = str(_resolve(args, config, "ref", "auto"))
    channels = _resolve(args, config, "channels", None)
    workers = int(_resolve(args, config, "workers", 1))

    utterances = _find_utterances(in_dir)
    tasks = [
        (str(in_dir), str(out_dir), utt, mask_spec, gmin_db, ref_spec, channels)
        for utt in utterances
    ]
    lines = _run_tasks(_enhance_one, tasks, workers)
    log_path = out_dir / "enhance.log"
    with open(log_path, "w") as fh:
        for line in lines:
            print(line)
            fh.write(line + "\n")
    print(f"enhance done utterances={len(utterances)} out={out_dir}")
    return 0


# ---------------------------------------------------------------------------
# evaluate


def _reference_waveform(refs_dir, utt, ref_channel):
    refs_dir = Path(refs_dir)
    for suffix in (".early.wav", ".ref.wav", ".wav"):
        path = refs_dir / f"{utt}{suffix}"
        if path.exists():
            ref = read_wav(path)
            break
    else:
        raise FileNotFoundError(f"no reference WAV for utterance {utt!r} in {refs_dir}")
    if ref.num_channels == 1:
        return ref.channel(0)
    if ref_channel == "closest":
        scene_path = refs_dir / f"{utt}.scene.json"
        if scene_path.exists():
            return ref.channel(RoomScene.load(scene_path).closest_mic())
        return ref.channel(0)
    return ref.channel(int(ref_channel))


def cmd_evaluate(args):
    config = _load_config(args.config)
    refs_dir = Path(_resolve(args, config, "refs", "scenes"))
    est_dir = Path(_resolve(args, config, "estimates", "enhanced"))
    out_path = _resolve(args, config, "out", None)
    ref_channel = str(_resolve(args, config, "ref_channel", "closest"))
    filter_len = int(_resolve(args, config, "filter_len", 512))
    sdr_max_db = float(_resolve(args, config, "sdr_max_db", 30.0))
    cfg = metrics.CISDRConfig(filter_len=filter_len, sdr_max_db=sdr_max_db)

    estimates = {p.name[: -len(".enhanced.wav")]: p for p in sorted(est_dir.glob("*.enhanced.wav"))}
    if not estimates:
        estimates = {p.stem: p for p in sorted(est_dir.glob("*.wav"))}
    if not estimates:
        raise FileNotFoundError(f"no estimate WAVs found in {est_dir}")
    ref_ids = {
        p.name.split(".")[0]
        for p in refs_dir.glob("*.wav")
    }
    missing = sorted(set(estimates) - ref_ids)
    if missing:
        raise ValueError(f"estimates without matching reference ids: {missing[:5]}")

    chosen_refs = _read_enhance_log(est_dir / "enhance.log")
    lines = []
    rows = []
    for utt, est_path in estimates.items():
        reference = _reference_waveform(refs_dir, utt, ref_channel)
        estimate = read_wav(est_path, expected_sample_rate=reference.sample_rate)
        if estimate.num_samples != reference.num_samples:
            raise ValueError(
                f"utterance {utt!r}: estimate has {estimate.num_samples} samples, "
                f"reference has {reference.num_samples}"
            )
        out_cisdr = metrics.ci_sdr(reference, estimate.channel(0), cfg)
        in_cisdr = np.nan
        condition = "unknown"
        scene_path = refs_dir / f"{utt}.scene.json"
        scene = RoomScene.load(scene_path) if scene_path.exists() else None
        if scene is not None:
            plan = scene.noise_plan
            diffuse = "none" if plan.diffuse_rsnr_db is None else f"{plan.diffuse_rsnr_db:.1f}dB"
            condition = f"diffuse:{diffuse}+dir:{len(plan.directional)}"
        mix_path = refs_dir / f"{utt}.mixture.wav"
        if mix_path.exists():
            mixture = read_wav(mix_path)
            channel = scene.closest_mic() if scene is not None else 0
            in_cisdr = metrics.ci_sdr(reference, mixture.channel(channel), cfg)
        residual = reference.mono() - estimate.mono()
        out_snr = (
            metrics.snr_db(reference, residual) if np.any(residual) else np.inf
        )
        ref_idx = chosen_refs.get(utt, -1)
        rows.append((in_cisdr, out_cisdr))
        lines.append(
            f"evaluate utt={utt} cond={condition} input_cisdr={in_cisdr:.4f} "
            f"output_cisdr={out_cisdr:.4f} output_snr={out_snr:.4f} ref={ref_idx}"
        )

    arr = np.asarray(rows)
    lines.append(
        f"evaluate mean input_cisdr={np.nanmean(arr[:, 0]):.4f} "
        f"output_cisdr={np.mean(arr[:, 1]):.4f} count={len(rows)}"
    )
    for line in lines:
        print(line)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    return 0


def _read_enhance_log(path):
    chosen = {}
    if not Path(path).exists():
        return chosen
    for line in Path(path).read_text().splitlines():
        fields = dict(part.split("=", 1) for part in line.split()[1:] if "=" in part)
        if "utt" in fields and "ref" in fields:
            chosen[fields["utt"]] = int(fields["ref"])
    return chosen


# ---------------------------------------------------------------------------
# selftest


def cmd_selftest(args):
    from . import selftest

    seed = int(args.seed) if args.seed is not None else 0
    results = selftest.run_all(seed=seed)
    failed = 0
    digest = hashlib.sha256()
    for name, ok, detail in results:
        status = "PASS" if ok else "FAIL"
        line = f"selftest check={name} status={status} detail={detail}"
        digest.update(line.encode())
        print(line)
        failed += not ok
    print(f"selftest summary checks={len(results)} failed={failed} hash={digest.hexdigest()[:16]}")
    return 1 if failed else 0


# ---------------------------------------------------------------------------


def _run_tasks(fn, tasks, workers):
    if workers <= 1:
        return [fn(task) for task in tasks]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def build_parser():
    parser = argparse.ArgumentParser(
        prog="maskbeam",
        description="Mask-driven multichannel speech enhancement toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate simulated scenes")
    sim.add_argument("--config", help="JSON config file; flags override it")
    sim.add_argument("--out", help="output directory")
    sim.add_argument("--num-scenes", dest="num_scenes", type=int)
    sim.add_argument("--array", choices=("circular7", "rectangular6", "random"))
    sim.add_argument("--seed", type=int)
    sim.add_argument("--duration", type=float, help="seconds per scene")
    sim.add_argument("--sample-rate", dest="sample_rate", type=int)
    sim.add_argument("--channels", type=_parse_channels,
                     help="1-based channel labels to keep, e.g. 1,7,4")
    sim.add_argument("--directional", type=int,
                     help="force the directional noise-source count (0-3)")
    sim.add_argument("--clean", nargs="+",
                     help="mono WAV source files (cycled); synthetic if omitted")
    sim.add_argument("--workers", type=int)
    sim.set_defaults(func=cmd_simulate)

    enh = sub.add_parser("enhance", help="enhance simulated or recorded scenes")
    enh.add_argument("--config", help="JSON config file; flags override it")
    enh.add_argument("--in", dest="in_dir", help="directory with *.mixture.wav")
    enh.add_argument("--out", help="output directory")
    enh.add_argument("--mask", help="'oracle' or 'net:WEIGHTS_PATH'")
    enh.add_argument("--gmin-db", dest="gmin_db", type=float,
                     help="mask floor in dB (<= 0; 0 disables post-masking)")
    enh.add_argument("--ref", help="'auto' or a fixed 0-based channel index")
    enh.add_argument("--channels", type=_parse_channels)
    enh.add_argument("--seed", type=int)
    enh.add_argument("--workers", type=int)
    enh.set_defaults(func=cmd_enhance)

    ev = sub.add_parser("evaluate", help="compute CI-SDR/SNR metrics")
    ev.add_argument("--config", help="JSON config file; flags override it")
    ev.add_argument("--refs", help="directory with reference WAVs")
    ev.add_argument("--estimates", help="directory with enhanced WAVs")
    ev.add_argument("--ref-channel", dest="ref_channel",
                    help="'closest' (default, needs scene files) or an index")
    ev.add_argument("--filter-len", dest="filter_len", type=int)
    ev.add_argument("--sdr-max-db", dest="sdr_max_db", type=float)
    ev.add_argument("--out", help="write the report to this file as well")
    ev.set_defaults(func=cmd_evaluate)

    st = sub.add_parser("selftest", help="run reduced invariant checks")
    st.add_argument("--seed", type=int)
    st.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, RuntimeError) as exc:
        print(f"error command={args.command} message={exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
