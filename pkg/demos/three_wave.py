"""Three-wave operators end to end, from the .hop text through verify.

Run: python3 demos/three_wave.py
"""
from hamcheck import catalog, verify
from hamcheck.dsl import parse, print_spec


def main():
    for name in ("ThreeWave1D", "ThreeWave2D"):
        text = print_spec(catalog.get(name).spec("1"), header=name)
        print(text)
        rep = verify(parse(text, name))
        print(f"=> {'Hamiltonian' if rep.hamiltonian else 'NOT Hamiltonian'}, "
              f"{sum(rep.checked.values())} condition instances checked\n")


if __name__ == "__main__":
    main()
