"""Periodic table data: symbols, standard atomic weights and default valences."""

_TABLE = """\
H 1.008
He 4.003
Li 6.941
Be 9.012
B 10.811
C 12.011
N 14.007
O 15.999
F 18.998
Ne 20.180
Na 22.990
Mg 24.305
Al 26.982
Si 28.086
P 30.974
S 32.065
Cl 35.453
Ar 39.948
K 39.098
Ca 40.078
Sc 44.956
Ti 47.867
V 50.942
Cr 51.996
Mn 54.938
Fe 55.845
Co 58.933
Ni 58.693
Cu 63.546
Zn 65.390
Ga 69.723
Ge 72.610
As 74.922
Se 78.960
Br 79.904
Kr 83.800
Rb 85.468
Sr 87.620
Y 88.906
Zr 91.224
Nb 92.906
Mo 95.940
Tc 98.000
Ru 101.070
Rh 102.906
Pd 106.420
Ag 107.868
Cd 112.411
In 114.818
Sn 118.710
Sb 121.760
Te 127.600
I 126.904
Xe 131.290
Cs 132.905
Ba 137.328
La 138.906
Ce 140.116
Pr 140.908
Nd 144.240
Pm 145.000
Sm 150.360
Eu 151.964
Gd 157.250
Tb 158.925
Dy 162.500
Ho 164.930
Er 167.260
Tm 168.934
Yb 173.040
Lu 174.967
Hf 178.490
Ta 180.948
W 183.840
Re 186.207
Os 190.230
Ir 192.217
Pt 195.078
Au 196.967
Hg 200.590
Tl 204.383
Pb 207.200
Bi 208.980
Po 209.000
At 210.000
Rn 222.000
Fr 223.000
Ra 226.000
Ac 227.000
Th 232.038
Pa 231.036
U 238.029
Np 237.000
Pu 244.000
Am 243.000
Cm 247.000
Bk 247.000
Cf 251.000
Es 252.000
Fm 257.000
Md 258.000
No 259.000
Lr 262.000
Rf 267.000
Db 268.000
Sg 271.000
Bh 272.000
Hs 270.000
Mt 276.000
Ds 281.000
Rg 280.000
Cn 285.000
Nh 284.000
Fl 289.000
Mc 288.000
Lv 293.000
Ts 294.000
Og 294.000
"""

SYMBOLS: tuple[str, ...] = tuple(line.split()[0] for line in _TABLE.splitlines())
ATOMIC_NUMBER: dict[str, int] = {sym: i + 1 for i, sym in enumerate(SYMBOLS)}
ATOMIC_WEIGHT: dict[str, float] = {
    line.split()[0]: float(line.split()[1]) for line in _TABLE.splitlines()
}

# Elements allowed without brackets, and the subset that may be written aromatic.
ORGANIC_SUBSET = frozenset({"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"})
AROMATIC_CAPABLE = frozenset({"B", "C", "N", "O", "P", "S", "Se", "As", "Te", "Si"})

DEFAULT_WHITELIST = frozenset(
    {"H", "B", "C", "N", "O", "F", "Si", "P", "S", "Cl", "Se", "Br", "I"}
)

# Neutral valences. Elements missing here are not valence-checked.
DEFAULT_VALENCES: dict[str, tuple[int, ...]] = {
    "H": (1,),
    "B": (3,),
    "C": (4,),
    "N": (3,),
    "O": (2,),
    "F": (1,),
    "Si": (4,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "Cl": (1,),
    "Se": (2, 4, 6),
    "Br": (1,),
    "I": (1,),
}

# Columns left of carbon lose valence when charged; columns right of it gain
# valence with positive charge and lose it with negative charge.
_LEFT_OF_CARBON = frozenset({"B"})


def allowed_valences(element: str, charge: int) -> tuple[int, ...] | None:
    """Charge-adjusted valence list, or None when the element is unchecked."""
    base = DEFAULT_VALENCES.get(element)
    if base is None:
        return None
    if charge == 0:
        return base
    if element in ("C", "Si"):
        shift = -abs(charge)
    elif element in _LEFT_OF_CARBON:
        shift = -charge
    else:
        shift = charge
    out = tuple(v + shift for v in base if v + shift >= 0)
    return out or (0,)


def is_element(symbol: str) -> bool:
    return symbol in ATOMIC_NUMBER
