"""Learned power allocation against a jammer-oblivious receiver, for a weak
and a strong power budget and 1, 2 and 4 UEs."""
import numpy as np
from _common import out_dir, parser, write_json

from jamsim import learn
from jamsim.config import ReceiverConfig, Scenario
from jamsim.grid import build_grid_spec
from jamsim.harness import ber_ratio
from jamsim.jammer import JammerConfig


def main():
    args = parser(__doc__).parse_args()
    d = out_dir(args)
    cfg = learn.TrainConfig(steps=20 if args.quick else 500, batch=32, lr=1e-2, seed=args.seed)
    out = []
    for n_ue in (1, 2, 4):
        for budget in (-5.0, 10.0):
            scn = Scenario(grid=build_grid_spec(n_ue, 0, 14, 32), n_rx=16, jammer=JammerConfig(dist="gaussian"),
                           rho_max_db=budget, receiver=ReceiverConfig("none", "estimated"), seed=args.seed)
            rho = learn.train(cfg, scn).allocation.rho
            r = ber_ratio(scn, rho, 5.0, 64 if args.quick else 256)
            out.append({"n_ue": n_ue, "budget_db": budget, "rho": rho.tolist(), **r})
            print(f"{n_ue} UE {budget:+.0f} dB: share per symbol",
                  np.array2string(rho / rho.sum(), precision=3, max_line_width=200), f"BER x{r['ratio']:.2f}")
    write_json(d / "fig5_learned.json", out)


if __name__ == "__main__":
    main()
