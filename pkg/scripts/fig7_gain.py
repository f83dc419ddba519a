"""Barrage-equivalent power of learned allocations over a range of budgets."""
from _common import out_dir, parser, write_json

from jamsim import learn
from jamsim.config import ReceiverConfig, Scenario
from jamsim.grid import build_grid_spec
from jamsim.harness import BracketError, effectiveness_gain
from jamsim.jammer import JammerConfig


def main():
    args = parser(__doc__).parse_args()
    d = out_dir(args)
    cfg = learn.TrainConfig(steps=20 if args.quick else 300, batch=32, lr=1e-2, seed=args.seed)
    rows = []
    for n_ue in (1, 4):
        for budget in (-10.0, -5.0, 0.0, 5.0, 10.0):
            scn = Scenario(grid=build_grid_spec(n_ue, 0, 14, 32), n_rx=16, jammer=JammerConfig(dist="gaussian"),
                           rho_max_db=budget, receiver=ReceiverConfig("none", "estimated"), seed=args.seed)
            rho = learn.train(cfg, scn).allocation.rho
            try:
                g = effectiveness_gain(rho, scn, 5.0, (-30.0, 40.0), n_frames=64 if args.quick else 256)
            except BracketError as e:
                if e.ber_hi < e.ber_lo:
                    raise
                # uniform barrage saturates below the learned BER: only a lower bound exists
                print(f"{n_ue} UE {budget:+.0f} dB: learned BER beyond any uniform power in range ({e})")
                rows.append({"n_ue": n_ue, "budget_db": budget, "equivalent_power_db": None,
                             "gain_db_lower_bound": 40.0 - budget})
                continue
            rows.append({"n_ue": n_ue, "budget_db": budget, **g})
            print(f"{n_ue} UE {budget:+.0f} dB: equivalent {g['equivalent_power_db']:+.2f} dB, "
                  f"gain {g['gain_db']:+.2f} dB")
    write_json(d / "fig7_gain.json", rows)


if __name__ == "__main__":
    main()
