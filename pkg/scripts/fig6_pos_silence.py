"""Learned allocation against a POS receiver that estimates the jammer
subspace on two silent symbols."""
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
    scn = Scenario(grid=build_grid_spec(4, 2, 14, 32), n_rx=16, jammer=JammerConfig(dist="gaussian"),
                   rho_max_db=10.0, receiver=ReceiverConfig("pos", "estimated"), seed=args.seed)
    cfg = learn.TrainConfig(steps=20 if args.quick else 500, batch=32, lr=1e-2, seed=args.seed)
    res = learn.train(cfg, scn, progress=lambda i, v, _th: i % 50 == 0 and print(f"step {i}: objective {v:.4f}"))
    rho = res.allocation.rho
    r = ber_ratio(scn, rho, 5.0, 64 if args.quick else 256)
    print("rho / rho_max", np.array2string(rho / scn.rho_max, precision=3, max_line_width=200))
    print(f"BER learned {r['ber_learned']:.4f}, uniform {r['ber_uniform']:.4f}")
    write_json(d / "fig6_learned.json", {"rho": rho.tolist(), "history": res.history, **r})


if __name__ == "__main__":
    main()
