"""wscalc: an executable toolchain for authenticated web service calls.

Subpackages:
  obj   object calculus: syntax, parsing, typing, small-step evaluation
  spi   spi calculus with correspondence assertions: terms, parsing, runtime
  soap  concrete SOAP-level protocols and envelope serialization

Modules:
  translate  object-calculus bodies and environments into spi systems
  adversary  Dolev-Yao opponents, knowledge closure, robust-safety campaigns
  cli        the `wscalc` command line
"""

__version__ = "0.1.0"
