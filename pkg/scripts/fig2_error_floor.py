"""BER/BLER against Eb/N0 for an unjammed link, a strong barrage jammer with
a jammer-oblivious LMMSE receiver, and the same jammer with POS and IAN-LMMSE."""
from _common import out_dir, parser

from jamsim.config import FecConfig, ReceiverConfig, Scenario
from jamsim.grid import build_grid_spec
from jamsim.harness import run_ber_sweep
from jamsim.jammer import JammerConfig


def main():
    args = parser(__doc__).parse_args()
    d = out_dir(args)
    frames = 40 if args.quick else 400
    snrs = [-5.0, 0.0, 5.0, 10.0, 15.0]
    base = Scenario(grid=build_grid_spec(4, 4, 14, 32), n_rx=16, seed=args.seed,
                    jammer=JammerConfig(dist="gaussian", n_antennas=2), rho_max_db=20.0)
    cases = {
        "unjammed": base.replace(jammer=None, rho_max_db=None),
        "lmmse": base,
        "pos": base.replace(receiver=ReceiverConfig("pos", "estimated")),
        "ian": base.replace(receiver=ReceiverConfig("ian", "estimated")),
    }
    for coded in (False, True):
        for name, scn in cases.items():
            if coded:
                scn = scn.replace(fec=FecConfig(enabled=True))
            res = run_ber_sweep(scn, snrs, min_errors=500, max_frames=frames)
            tag = f"{name}_{'coded' if coded else 'uncoded'}"
            (d / f"fig2_{tag}.csv").write_text(res.to_csv())
            col = res.bler if coded else res.ber
            print(f"{tag:16s}", " ".join(f"{v:.2e}" for v in col))


if __name__ == "__main__":
    main()
