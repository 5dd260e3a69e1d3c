"""Run the finite-groupoid fixtures and report each quotient against its expected semidirect product.

Usage: python3 scripts/appendix_suite.py
"""

from transalg import groupoid as fg


def main():
    reports = fg.appendix_suite()
    for r in reports:
        status = "ok  " if r.passed else "FAIL"
        print(f"{status} {r.name:<28} {r.product_arrows:>3} -> {r.quotient_arrows:>3} arrows {r.detail}")
    try:
        fg.run_fixture(fg.invalid_fixture())
        print("invalid fixture: not rejected")
    except fg.GroupoidError as exc:
        print(f"invalid fixture rejected: {exc}")
    raise SystemExit(0 if all(r.passed for r in reports) else 1)


if __name__ == "__main__":
    main()
