"""Coded BLER under POS as the UE and jammer channels age within a frame.

Smaller Gauss-Markov correlation means faster channel variation; the jammer
subspace estimated on the silent symbols goes stale, so BLER rises.
"""
from _common import out_dir, parser

from jamsim.config import ChannelConfig, FecConfig, ReceiverConfig, Scenario
from jamsim.grid import build_grid_spec
from jamsim.harness import run_ber_sweep
from jamsim.jammer import JammerConfig


def main():
    args = parser(__doc__).parse_args()
    d = out_dir(args)
    frames = 40 if args.quick else 300
    snrs = [0.0, 5.0, 10.0, 15.0]
    lines = ["alpha," + ",".join(f"bler_{s:g}dB" for s in snrs)]
    for alpha in (1.0, 0.99999, 0.9999, 0.999):
        scn = Scenario(grid=build_grid_spec(4, 4, 14, 32), n_rx=16, seed=args.seed,
                       channel=ChannelConfig(alpha_ue=alpha, alpha_jammer=alpha),
                       jammer=JammerConfig(dist="gaussian", n_antennas=2), rho_max_db=20.0,
                       receiver=ReceiverConfig("pos", "estimated"), fec=FecConfig(enabled=True))
        res = run_ber_sweep(scn, snrs, min_errors=500, max_frames=frames)
        lines.append(f"{alpha!r}," + ",".join(repr(float(v)) for v in res.bler))
        print(lines[-1])
    (d / "fig3_mobility.csv").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
