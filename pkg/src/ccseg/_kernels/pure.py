"""Pure-Python implementations of the per-record parsing kernels.

These are the reference semantics; the compiled module in _native.pyx
mirrors them bit-for-bit (enforced by the equivalence tests).  All
functions are branch-identical on ASCII input and reject non-ASCII
outright, so the two backends can never disagree on split behaviour.

Date handling uses civil-calendar arithmetic instead of datetime so that
results are plain integers, years outside datetime's range cannot raise,
and the compiled mirror stays a line-by-line port.
"""

import re

BACKEND = "pure"

# Sentinel for "could not be parsed as written"; far outside any credible
# POSIX value, negative or positive.
UNUSABLE = -(2**62)

# Explicit separator set (ASCII whitespace plus the comma that trails the
# weekday); deliberately narrower than str.split so the compiled backend
# can match it byte-for-byte.
_SEP_RUN = re.compile(r"[ \t\n\r\f\v,]+")

_MONTHS = {
    "jan": 1, "feb": 2, "mar": 3, "apr": 4, "may": 5, "jun": 6,
    "jul": 7, "aug": 8, "sep": 9, "oct": 10, "nov": 11, "dec": 12,
}
_FULL_MONTHS = {
    "january": 1, "february": 2, "march": 3, "april": 4, "may": 5,
    "june": 6, "july": 7, "august": 8, "september": 9, "october": 10,
    "november": 11, "december": 12,
}
_WEEKDAYS = frozenset(
    ["mon", "tue", "wed", "thu", "fri", "sat", "sun",
     "monday", "tuesday", "wednesday", "thursday", "friday",
     "saturday", "sunday"]
)

_DAYS_IN_MONTH = (31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31)


def _is_leap(y):
    return y % 4 == 0 and (y % 100 != 0 or y % 400 == 0)


def _days_in_month(y, m):
    if m == 2 and _is_leap(y):
        return 29
    return _DAYS_IN_MONTH[m - 1]


def days_from_civil(y, m, d):
    """Days since 1970-01-01 for a proleptic-Gregorian civil date."""
    y -= m <= 2
    era = y // 400
    yoe = y - era * 400
    doy = (153 * (m + (-3 if m > 2 else 9)) + 2) // 5 + d - 1
    doe = yoe * 365 + yoe // 4 - yoe // 100 + doy
    return era * 146097 + doe - 719468


def civil_from_days(z):
    """Inverse of days_from_civil: (year, month, day)."""
    z += 719468
    era = z // 146097
    doe = z - era * 146097
    yoe = (doe - doe // 1460 + doe // 36524 - doe // 146096) // 365
    y = yoe + era * 400
    doy = doe - (365 * yoe + yoe // 4 - yoe // 100)
    mp = (5 * doy + 2) // 153
    d = doy - (153 * mp + 2) // 5 + 1
    m = mp + (3 if mp < 10 else -9)
    return y + (m <= 2), m, d


def _ascii_digits(t):
    return len(t) > 0 and all("0" <= c <= "9" for c in t)


def _month_number(t):
    """Month number for a lowercase token, or 0 if not a month name."""
    if len(t) == 3:
        return _MONTHS.get(t, 0)
    return _FULL_MONTHS.get(t, 0)


def _windowed_year(v):
    # Two-digit years: 70-99 are 1900s, 00-69 are 2000s.
    return v + 1900 if v >= 70 else v + 2000


def timestamp14_to_posix(s):
    """POSIX seconds for a YYYYMMDDHHMMSS UTC timestamp, or UNUSABLE."""
    if len(s) != 14 or not s.isascii() or not _ascii_digits(s):
        return UNUSABLE
    y = int(s[0:4])
    mo = int(s[4:6])
    d = int(s[6:8])
    h = int(s[8:10])
    mi = int(s[10:12])
    se = int(s[12:14])
    if not 1 <= mo <= 12:
        return UNUSABLE
    if not 1 <= d <= _days_in_month(y, mo):
        return UNUSABLE
    if h > 23 or mi > 59 or se > 59:
        return UNUSABLE
    return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + se


def http_date_to_posix(s):
    """POSIX seconds (UTC) for an HTTP date header value, or UNUSABLE.

    Accepts IMF-fixdate, RFC-850 dates and asctime, plus the lenient
    extensions seen in real server output: a missing, duplicated or
    misplaced GMT/UTC token, numeric +-hhmm zones (converted to UTC),
    single-digit days and hours, and two-digit or four-digit years in any
    of the forms.  The parser is a token bag: the weekday is ignored
    wherever it appears, zone tokens may float, and the day/month/year
    are recovered positionally from what remains.  A value with no zone
    indicator at all is taken as UTC.
    """
    if not s.isascii():
        return UNUSABLE
    tokens = [t for t in _SEP_RUN.split(s) if t]
    day = 0
    month = 0
    year = -1
    hh = -1
    mm = 0
    ss = 0
    zone = None

    for tok in tokens:
        t = tok.lower()
        if t in _WEEKDAYS:
            continue
        if t in ("gmt", "ut", "utc", "z"):
            if zone is not None and zone != 0:
                return UNUSABLE
            zone = 0
            continue
        if len(t) == 5 and t[0] in "+-" and _ascii_digits(t[1:]):
            zh = int(t[1:3])
            zm = int(t[3:5])
            if zh > 23 or zm > 59:
                return UNUSABLE
            off = zh * 3600 + zm * 60
            if t[0] == "-":
                off = -off
            if zone is not None and zone != off:
                return UNUSABLE
            zone = off
            continue
        if ":" in t:
            if hh >= 0:
                return UNUSABLE
            parts = t.split(":")
            if len(parts) != 3:
                return UNUSABLE
            for p in parts:
                if not (1 <= len(p) <= 2 and _ascii_digits(p)):
                    return UNUSABLE
            hh = int(parts[0])
            mm = int(parts[1])
            ss = int(parts[2])
            if hh > 23 or mm > 59 or ss > 59:
                return UNUSABLE
            continue
        if "-" in t:
            # RFC-850 compound date, e.g. 06-Nov-94 or 06-Nov-1994
            parts = t.split("-")
            if len(parts) != 3:
                return UNUSABLE
            dpart, mpart, ypart = parts
            mo = _month_number(mpart)
            if (mo == 0 or not 1 <= len(dpart) <= 2 or not _ascii_digits(dpart)
                    or len(ypart) not in (2, 4) or not _ascii_digits(ypart)):
                return UNUSABLE
            if day or month or year >= 0:
                return UNUSABLE
            day = int(dpart)
            month = mo
            year = int(ypart) if len(ypart) == 4 else _windowed_year(int(ypart))
            continue
        if _ascii_digits(t):
            if len(t) == 4:
                if year >= 0:
                    return UNUSABLE
                year = int(t)
            elif len(t) <= 2:
                if day == 0:
                    day = int(t)
                elif year < 0:
                    year = _windowed_year(int(t))
                else:
                    return UNUSABLE
            else:
                return UNUSABLE
            continue
        mo = _month_number(t)
        if mo == 0 or month:
            return UNUSABLE
        month = mo
        continue

    if day == 0 or month == 0 or year < 0 or hh < 0:
        return UNUSABLE
    if day > _days_in_month(year, month):
        return UNUSABLE
    off = zone if zone is not None else 0
    return days_from_civil(year, month, day) * 86400 + hh * 3600 + mm * 60 + ss - off


def count_pct_encoded(s):
    """(valid, stray) percent counts: %HH triplets vs lone '%' bytes."""
    valid = 0
    stray = 0
    i = 0
    n = len(s)
    while i < n:
        if s[i] == "%":
            if i + 2 < n and _is_hex(s[i + 1]) and _is_hex(s[i + 2]):
                valid += 1
                i += 3
                continue
            stray += 1
        i += 1
    return valid, stray


def _is_hex(c):
    return "0" <= c <= "9" or "a" <= c <= "f" or "A" <= c <= "F"
