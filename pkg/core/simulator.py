"""Scenario runner: per-epoch waveform synthesis, measurement, detection and tracking."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from core.adversary import (
    attacker_position,
    attacker_velocity,
    fbs_spoof_delays,
    gen_fbs_waveform,
    gen_jam_waveform,
    gen_meacon_waveform,
)
from core.auth_embed import (
    AuthScheme,
    EmbeddingMap,
    build_auth_message,
    build_embedding_map,
    embed_tag,
    encode_tag,
    extract_and_verify,
    schedule_offsets,
)
from core.channel import (
    LinkState,
    apply_link,
    make_link,
    noise_power_dbm,
    noise_psd_dbm_hz,
    power_control,
    superpose_with_noise,
)
from core.detect import (
    AngleGate,
    AoaEstimate,
    HandshakeGate,
    absa_check_all,
    broadside_angle,
    esprit_azimuth,
    handshake_check,
    reference_angle,
    source_snapshots,
    ul_position_model,
)
from core.errors import ConfigurationError, MeasurementUnavailable, ParameterError, PrsGuardError
from core.locate import classify_outcome, multilaterate
from core.prs_grid import map_prs_symbols, ofdm_modulate, prs_plain_bits, prs_re_indices, qpsk_map
from core.receiver import PositioningReceiver, ToaMeasurement, compute_rstd, equalize_slot
from core.scenario import (
    TrajectoryPoint,
    build_topology,
    load_trajectory,
    serving_bs,
    synthetic_trajectory,
    trajectory_extent,
)
from core.secure_prs import KeyMaterial, encrypt_prs
from core.tracking import InnovationGatedTracker
from models.records import EpochRecord
from models.scenario import AttackKind, Phase, ScenarioConfig
from models.signal import IqSignal, Numerology, PrsConfig
from models.verdict import DetectionVerdict, OutcomeClass, OutcomeKind, Technique

logger = logging.getLogger(__name__)

FRAME_STRIDE = 100
FRAME_PERIOD = 1024
TAG_SLOT = 0

STREAM_NOISE = 0
STREAM_UPLINK = 1
STREAM_ARRAY = 2
STREAM_JAMMER = 3

ProgressCallback = Callable[[int], None]


def epoch_seed(master: int, epoch: int, stream: int) -> int:
    """Independent per-epoch seed for one random stream."""
    return int(np.random.SeedSequence([master, epoch, stream]).generate_state(1)[0])


def _no_position(verdict: DetectionVerdict) -> DetectionVerdict:
    """Without a downlink fix there is nothing a technique can accept."""
    if not verdict.valid:
        return verdict
    return verdict.model_copy(update={"valid": False, "reason": "no-downlink-position"})


@dataclass
class Transmission:
    """One BS's transmit waveform for an epoch and what its receiver needs."""

    waveform: IqSignal
    replicas: List[IqSignal]
    pilot_cells: Tuple[np.ndarray, np.ndarray]
    pilots: np.ndarray
    n_id_seq: int


@dataclass
class AttackEmission:
    signal: IqSignal
    position: np.ndarray
    rx_power_dbm: float


@dataclass
class _TagLane:
    scheme: AuthScheme
    lane: int
    maps: Dict[int, EmbeddingMap] = field(default_factory=dict)


class ScenarioRunner:
    """Holds the immutable state of one scenario and simulates its epochs."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.num = Numerology.from_profile(cfg.profile)
        self.fs = self.num.sample_rate_hz

        traj = cfg.trajectory
        self.trajectory: List[TrajectoryPoint] = (
            load_trajectory(traj.path) if traj.path else synthetic_trajectory(traj.synthetic)
        )
        window = cfg.attack.window
        if cfg.attack.kind != AttackKind.NONE and window.attack_end > len(self.trajectory):
            raise ConfigurationError(
                f"attack window ends at epoch {window.attack_end}, "
                f"trajectory has {len(self.trajectory)} points"
            )

        center, extent = trajectory_extent(self.trajectory, margin_m=cfg.topology.isd_m)
        self.topology = build_topology(extent, cfg.topology.seed, cfg.topology.isd_m, center)

        sec = cfg.security
        self.offsets = schedule_offsets(3, cfg.prs.k_comb, sec.tags)
        lanes: List[AuthScheme] = []
        if sec.hmac:
            lanes.append(
                AuthScheme.hmac(bytes.fromhex(cfg.keys.hmac_key_hex), ldpc_seed=cfg.ldpc_seed)
            )
        if sec.ds:
            lanes.append(
                AuthScheme.digital_signature(
                    bytes.fromhex(cfg.keys.ds_seed_hex), ldpc_seed=cfg.ldpc_seed
                )
            )
        self.tag_lanes = [_TagLane(scheme, lane) for lane, scheme in enumerate(lanes)]
        self.prs_key = bytes.fromhex(cfg.keys.prs_key_hex)

        self.receiver = PositioningReceiver(self.num, cfg.receiver)
        self.noise_psd = noise_psd_dbm_hz(cfg.channel)
        self.handshake_gate = HandshakeGate(
            epsilon_m=cfg.thresholds.epsilon_m, ul_sigma_m=cfg.detect.ul_sigma_m
        )
        sample_prs = self.prs_config(0)
        self.prs_cells = int(prs_re_indices(sample_prs, self.num)[0].size) * cfg.prs.n_slots

    @property
    def n_epochs(self) -> int:
        return len(self.trajectory)

    def prs_config(self, bs_id: int) -> PrsConfig:
        prs_offset, _ = self.offsets[self.topology.colour(bs_id)]
        return PrsConfig(
            n_id_seq=bs_id % 4096,
            k_comb=self.cfg.prs.k_comb,
            k_offset=prs_offset,
            num_symbols=self.cfg.prs.num_symbols,
            start_symbol=self.cfg.prs.start_symbol,
            stagger=self.cfg.prs.stagger,
        )

    def _tag_map(self, lane: _TagLane, bs_id: int, prs: PrsConfig) -> EmbeddingMap:
        if bs_id not in lane.maps:
            _, tag_offset = self.offsets[self.topology.colour(bs_id)]
            assert tag_offset is not None
            lane.maps[bs_id] = build_embedding_map(
                prs,
                self.num,
                tag_offset,
                lane.scheme.coded_bits // 2,
                lane=lane.lane,
                n_lanes=len(self.tag_lanes),
            )
        return lane.maps[bs_id]

    def transmission(self, bs_id: int, frame: int) -> Transmission:
        prs = self.prs_config(bs_id)
        grids, replicas = [], []
        pilots = np.zeros(0, dtype=complex)
        for slot in range(self.cfg.prs.n_slots):
            bits = prs_plain_bits(prs, self.num, slot)
            if self.cfg.security.encryption:
                km = KeyMaterial.for_slot(self.prs_key, bs_id, frame, slot)
                symbols = encrypt_prs(bits, km, bs_id).symbols
            else:
                symbols = qpsk_map(bits)
            grid = map_prs_symbols(prs, self.num, symbols, slot, frame)
            replicas.append(ofdm_modulate(grid, self.num))
            if slot == TAG_SLOT:
                pilots = symbols
                msg = build_auth_message(bs_id, frame, slot, prs.n_id_seq)
                for lane in self.tag_lanes:
                    grid = embed_tag(
                        grid, self._tag_map(lane, bs_id, prs), encode_tag(lane.scheme, msg)
                    )
            grids.append(grid)
        waveform = IqSignal(
            np.concatenate([ofdm_modulate(g, self.num).samples for g in grids]),
            self.fs,
            replicas[0].t0_s,
        ).normalized()
        return Transmission(
            waveform=waveform,
            replicas=replicas,
            pilot_cells=prs_re_indices(prs, self.num),
            pilots=pilots,
            n_id_seq=prs.n_id_seq,
        )

    def uplink_report(self, epoch: int) -> np.ndarray:
        truth = self.trajectory[epoch - 1].xy_m
        return ul_position_model(
            truth, self.handshake_gate, epoch_seed(self.cfg.seed, epoch, STREAM_UPLINK)
        )

    def _attack_emission(
        self,
        epoch: int,
        point: TrajectoryPoint,
        serving: Sequence[int],
        links: Sequence[LinkState],
        tx: Dict[int, Transmission],
        frame: int,
    ) -> AttackEmission:
        att, ch = self.cfg.attack, self.cfg.channel
        power = float(att.power_dbm if att.power_dbm is not None else ch.attacker_power_dbm)
        pos = attacker_position(self.trajectory, epoch - 1, att.lag_points)
        vel = attacker_velocity(self.trajectory, epoch - 1, att.lag_points)
        bs_xy = self.topology.bs_positions

        if att.kind == AttackKind.MEACONING:
            captured = [
                apply_link(
                    tx[b].waveform,
                    make_link(
                        bs_xy[b],
                        pos,
                        ch,
                        ch.bs_height_m,
                        ch.attacker_height_m,
                        tx_power_dbm=link.tx_power_dbm,
                        rx_velocity=vel,
                    ),
                )
                for b, link in zip(serving, links)
            ]
            composite = superpose_with_noise(captured, -np.inf, self.fs, 0)
            gain_db = power - 10.0 * np.log10(composite.power())
            waveform = gen_meacon_waveform(composite, gain_db, att.meacon_processing_delay_s)
            emitted_dbm = 0.0
        elif att.kind == AttackKind.FBS_SPOOF:
            if att.spoof_target_position is not None:
                fake = np.asarray(att.spoof_target_position, dtype=float)
            else:
                fake = pos + np.asarray(att.spoof_offset_m, dtype=float)
            subset = att.spoof_bs_subset if att.spoof_bs_subset is not None else [0, 1, 2]
            spoofed = [serving[i] for i in subset]
            delays = fbs_spoof_delays(fake, [bs_xy[b] for b in spoofed], pos)
            waveform = gen_fbs_waveform(
                [self.prs_config(b) for b in spoofed], delays, self.num, frame, self.cfg.prs.n_slots
            ).normalized()
            emitted_dbm = power
        else:
            bandwidth = att.jam_bandwidth_hz or self.num.occupied_bandwidth_hz
            waveform = gen_jam_waveform(
                self.receiver.buffer_samples(self.cfg.prs.n_slots),
                0.0,
                epoch_seed(self.cfg.seed, epoch, STREAM_JAMMER),
                self.fs,
                bandwidth,
                tx[serving[0]].waveform.t0_s,
            )
            emitted_dbm = power

        link = make_link(
            pos,
            point.xy_m,
            ch,
            ch.attacker_height_m,
            ch.ue_height_m,
            tx_power_dbm=emitted_dbm,
            rx_velocity=point.velocity_mps,
            tx_velocity=vel,
        )
        return AttackEmission(
            signal=apply_link(waveform, link),
            position=pos,
            rx_power_dbm=power - link.pathloss_db,
        )

    def _verify_tags(
        self,
        rx: IqSignal,
        lane: _TagLane,
        serving: Sequence[int],
        toas: Dict[int, ToaMeasurement],
        tx: Dict[int, Transmission],
        frame: int,
    ) -> DetectionVerdict:
        technique = lane.scheme.technique
        worst_noise = 0.0
        for b in serving:
            toa = toas[b]
            if not toa.detected:
                return DetectionVerdict(technique=technique, valid=False, reason="not-heard")
            try:
                grid, noise_var = equalize_slot(
                    rx, self.num, toa.sample_index, toa.frequency_hz, tx[b].pilot_cells, tx[b].pilots
                )
            except ParameterError:
                return DetectionVerdict(technique=technique, valid=False, reason="window-truncated")
            msg = build_auth_message(b, frame, TAG_SLOT, tx[b].n_id_seq)
            verdict = extract_and_verify(
                grid, self._tag_map(lane, b, self.prs_config(b)), lane.scheme, msg, noise_var
            )
            if not verdict.valid:
                return verdict
            worst_noise = max(worst_noise, noise_var)
        return DetectionVerdict(
            technique=technique, valid=True, diagnostics={"max_noise_var": worst_noise}
        )

    def _absa(
        self,
        epoch: int,
        point: TrajectoryPoint,
        serving: Sequence[int],
        links: Sequence[LinkState],
        attacker: Optional[AttackEmission],
    ) -> DetectionVerdict:
        ula = self.cfg.detect.ula
        reference_position = self.uplink_report(max(epoch - 1, 1))
        gain_db = 10.0 * np.log10(self.prs_cells)
        noise_dbm = noise_power_dbm(self.cfg.channel, self.fs)
        seeds = np.random.SeedSequence([self.cfg.seed, epoch, STREAM_ARRAY]).generate_state(3)

        estimates: List[AoaEstimate] = []
        gates: List[AngleGate] = []
        for k, (b, link) in enumerate(zip(serving, links)):
            bs_xy = self.topology.bs_positions[b]
            source, rx_dbm = bs_xy, link.rx_power_dbm
            if attacker is not None and attacker.rx_power_dbm > rx_dbm:
                source, rx_dbm = attacker.position, attacker.rx_power_dbm
            d = source - point.xy_m
            theta = broadside_angle(float(np.arctan2(d[1], d[0])), ula.array_axis_deg)
            snaps = source_snapshots(theta, rx_dbm - noise_dbm + gain_db, ula, int(seeds[k]))
            estimates.append(esprit_azimuth(snaps, 1, ula.spacing_wavelengths))
            gates.append(
                AngleGate(
                    reference_angle(reference_position, bs_xy, ula.array_axis_deg),
                    self.cfg.thresholds.delta_th_deg,
                )
            )
        return absa_check_all(estimates, gates)

    def simulate_epoch(self, epoch: int) -> EpochRecord:
        """Physical layer, positioning and the stateless checks of one epoch."""
        point = self.trajectory[epoch - 1]
        phase = self.cfg.attack.window.phase_of(epoch)
        try:
            return self._simulate(epoch, point, phase)
        except PrsGuardError as exc:
            logger.warning("epoch %d failed: %s", epoch, exc)
            return self._failed_record(epoch, point, phase, str(exc))

    def _simulate(self, epoch: int, point: TrajectoryPoint, phase: Phase) -> EpochRecord:
        cfg, ch = self.cfg, self.cfg.channel
        attack_on = phase == Phase.ATTACK and cfg.attack.kind != AttackKind.NONE
        frame = (FRAME_STRIDE * epoch) % FRAME_PERIOD
        serving = serving_bs(self.topology, point.xy_m)
        bs_xy = {b: self.topology.bs_positions[b] for b in serving}

        links = power_control(
            [
                make_link(
                    bs_xy[b],
                    point.xy_m,
                    ch,
                    ch.bs_height_m,
                    ch.ue_height_m,
                    rx_velocity=point.velocity_mps,
                )
                for b in serving
            ],
            ch.target_rx_dbm,
            ch.tx_cap_dbm,
        )
        tx = {b: self.transmission(b, frame) for b in serving}
        received = [apply_link(tx[b].waveform, link) for b, link in zip(serving, links)]

        attacker: Optional[AttackEmission] = None
        if attack_on:
            attacker = self._attack_emission(epoch, point, serving, links, tx, frame)
            received.append(attacker.signal)

        rx = superpose_with_noise(
            received,
            self.noise_psd,
            self.fs,
            epoch_seed(cfg.seed, epoch, STREAM_NOISE),
            n_samples=self.receiver.buffer_samples(cfg.prs.n_slots),
            sample_rate_hz=self.fs,
        )
        toas = {t.bs_id: t for t in self.receiver.measure_all(rx, {b: tx[b].replicas for b in serving})}

        est = None
        reference: Optional[int] = None
        try:
            rstd = compute_rstd(list(toas.values()), serving[0], self.fs)
            reference = rstd.reference_bs
            est = multilaterate(rstd, bs_xy)
        except MeasurementUnavailable as exc:
            logger.debug("epoch %d: %s", epoch, exc)
        outcome = classify_outcome(est, point.xy_m, cfg.thresholds.success_m)
        estimate = None
        if est is not None and outcome.kind != OutcomeKind.DOS:
            estimate = (float(est.xy_m[0]), float(est.xy_m[1]))

        verdicts: Dict[Technique, DetectionVerdict] = {}
        for lane in self.tag_lanes:
            verdicts[lane.scheme.technique] = self._verify_tags(rx, lane, serving, toas, tx, frame)
        if cfg.security.absa:
            verdicts[Technique.ABSA] = self._absa(epoch, point, serving, links, attacker)
        if cfg.security.handshake:
            verdicts[Technique.HANDSHAKE] = handshake_check(
                estimate, self.uplink_report(epoch), self.handshake_gate
            )
        if estimate is None:
            verdicts = {t: _no_position(v) for t, v in verdicts.items()}

        diagnostics: Dict[str, float] = {}
        finite = [t.peak_to_floor_db for t in toas.values() if np.isfinite(t.peak_to_floor_db)]
        if finite:
            diagnostics["min_peak_to_floor_db"] = float(min(finite))
        if est is not None and np.isfinite(est.residual_norm):
            diagnostics["residual_norm_m"] = est.residual_norm

        return EpochRecord(
            epoch=epoch,
            phase=phase,
            t_s=point.t_s,
            truth=(float(point.xy_m[0]), float(point.xy_m[1])),
            estimate=estimate,
            outcome=outcome,
            serving_bs=serving,
            reference_bs=reference,
            n_detected=sum(t.detected for t in toas.values()),
            attacker_distance_m=(
                float(np.linalg.norm(attacker.position - point.xy_m)) if attacker else None
            ),
            verdicts=verdicts,
            diagnostics=diagnostics,
        )

    def _failed_record(
        self, epoch: int, point: TrajectoryPoint, phase: Phase, reason: str
    ) -> EpochRecord:
        techniques = [lane.scheme.technique for lane in self.tag_lanes]
        if self.cfg.security.absa:
            techniques.append(Technique.ABSA)
        if self.cfg.security.handshake:
            techniques.append(Technique.HANDSHAKE)
        attacked = phase == Phase.ATTACK and self.cfg.attack.kind != AttackKind.NONE
        attacker_distance = None
        if attacked:
            pos = attacker_position(self.trajectory, epoch - 1, self.cfg.attack.lag_points)
            attacker_distance = float(np.linalg.norm(pos - point.xy_m))
        return EpochRecord(
            epoch=epoch,
            phase=phase,
            t_s=point.t_s,
            truth=(float(point.xy_m[0]), float(point.xy_m[1])),
            outcome=OutcomeClass(kind=OutcomeKind.DOS),
            serving_bs=(-1, -1, -1),
            attacker_distance_m=attacker_distance,
            verdicts={
                t: DetectionVerdict(technique=t, valid=False, reason="epoch-failed")
                for t in techniques
            },
            diagnostics={},
        )

    def track(self, records: List[EpochRecord]) -> None:
        """Sequential tracker pass; adds the tracking verdict in epoch order."""
        d, th = self.cfg.detect, self.cfg.thresholds
        assert th.gamma is not None
        tracker = InnovationGatedTracker(
            meas_sigma=d.meas_sigma_m,
            accel_sigma=d.accel_sigma,
            gamma=th.gamma,
            speed_sigma=d.initial_speed_sigma,
            m=th.mofn_m,
            n=th.mofn_n,
            reinit_after=th.reinit_after,
            reinit_window=th.reinit_window,
        )
        for record in records:
            record.verdicts[Technique.TRACKING] = tracker.step(record.estimate)

    def run(
        self, workers: int = 1, progress: Optional[ProgressCallback] = None
    ) -> List[EpochRecord]:
        epochs = range(1, self.n_epochs + 1)
        results: Iterable[EpochRecord]
        if workers > 1:
            executor = ProcessPoolExecutor(
                max_workers=workers,
                initializer=_init_worker,
                initargs=(self.cfg.model_dump_json(),),
            )
            with executor:
                records = self._collect(
                    executor.map(_worker_epoch, epochs, chunksize=4), progress
                )
        else:
            records = self._collect(map(self.simulate_epoch, epochs), progress)
        if self.cfg.security.tracking:
            self.track(records)
        return records

    @staticmethod
    def _collect(
        results: Iterable[EpochRecord], progress: Optional[ProgressCallback]
    ) -> List[EpochRecord]:
        records = []
        for record in results:
            records.append(record)
            if progress is not None:
                progress(record.epoch)
        return records


_worker_runner: Optional[ScenarioRunner] = None


def _init_worker(cfg_json: str) -> None:
    global _worker_runner
    _worker_runner = ScenarioRunner(ScenarioConfig.model_validate_json(cfg_json))


def _worker_epoch(epoch: int) -> EpochRecord:
    assert _worker_runner is not None
    return _worker_runner.simulate_epoch(epoch)


def run_scenario(
    cfg: ScenarioConfig, workers: int = 1, progress: Optional[ProgressCallback] = None
) -> List[EpochRecord]:
    """Run every epoch of ``cfg``; the result depends only on the config."""
    runner = ScenarioRunner(cfg)
    logger.info(
        "running %s: %d epochs, attack=%s, profile=%s",
        cfg.name,
        runner.n_epochs,
        cfg.attack.kind.value,
        cfg.profile,
    )
    return runner.run(workers=workers, progress=progress)
