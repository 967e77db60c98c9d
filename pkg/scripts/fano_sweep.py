"""Count-scale Fano factor of the birth-death process under the LNA,
swept over system size. The stationary distribution is Poisson, so the
Fano factor should be 1 regardless of omega."""

from kaemsim.crn import Complex, MassAction, Network
from kaemsim.simulate import simulate


def main():
    print(f"{'omega':>10} {'mean':>12} {'var':>12} {'fano':>8}")
    for omega in (10.0, 100.0, 1000.0, 10000.0):
        net = Network()
        x = net.add_species("X")
        net.add_reaction(Complex(), Complex({x.id: 1}), MassAction(10.0))
        net.add_reaction(Complex({x.id: 1}), Complex(), MassAction(1.0))
        tc = simulate(net, {x.id: 0.0}, 20.0, lna=True, omega=omega)
        mean = tc.means[-1, 0]
        var = tc.covs[-1, 0, 0]
        fano = omega * var / mean
        print(f"{omega:>10.0f} {mean:>12.6f} {var:>12.6g} {fano:>8.4f}")


if __name__ == "__main__":
    main()
