# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled mirror of the pure-Python parsing kernels.

Semantics are defined by ccseg._kernels.pure; this module is a
line-for-line port to C-level byte scanning and must never diverge
(the test suite cross-checks the two backends on random input).
Non-ASCII input is rejected, matching the pure backend's guard.
"""

BACKEND = "native"

UNUSABLE = -(2**62)

cdef long long _UNUSABLE = -(<long long>1 << 62)

cdef const char* _MONTH3 = b"janfebmaraprmayjunjulaugsepoctnovdec"

_FULL_MONTHS_PY = {
    b"january": 1, b"february": 2, b"march": 3, b"april": 4, b"may": 5,
    b"june": 6, b"july": 7, b"august": 8, b"september": 9, b"october": 10,
    b"november": 11, b"december": 12,
}
_WEEKDAYS_PY = frozenset(
    [b"mon", b"tue", b"wed", b"thu", b"fri", b"sat", b"sun",
     b"monday", b"tuesday", b"wednesday", b"thursday", b"friday",
     b"saturday", b"sunday"]
)

cdef int[12] _DIM = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31]


cdef inline bint _is_leap(long long y) noexcept:
    return y % 4 == 0 and (y % 100 != 0 or y % 400 == 0)


cdef inline int _days_in_month(long long y, int m) noexcept:
    if m == 2 and _is_leap(y):
        return 29
    return _DIM[m - 1]


cdef long long _days_from_civil(long long y, int m, int d) noexcept:
    # Truncating C division with the classic negative-year adjustments;
    # equivalent to the floor-division form used by the pure backend.
    cdef long long era, yoe, doy, doe
    if m <= 2:
        y -= 1
    era = (y if y >= 0 else y - 399) / 400
    yoe = y - era * 400
    doy = (153 * (m + (-3 if m > 2 else 9)) + 2) / 5 + d - 1
    doe = yoe * 365 + yoe / 4 - yoe / 100 + doy
    return era * 146097 + doe - 719468


def days_from_civil(y, m, d):
    """Days since 1970-01-01 for a proleptic-Gregorian civil date."""
    return _days_from_civil(y, m, d)


cdef inline bint _digit(unsigned char c) noexcept:
    return c >= 48 and c <= 57  # '0'..'9'


cdef inline bint _hexd(unsigned char c) noexcept:
    if c >= 48 and c <= 57:
        return True
    if c >= 97 and c <= 102:  # 'a'..'f'
        return True
    return c >= 65 and c <= 70  # 'A'..'F'


cdef inline unsigned char _low(unsigned char c) noexcept:
    if c >= 65 and c <= 90:
        return c + 32
    return c


cdef inline bint _all_digits(const unsigned char* p, Py_ssize_t n) noexcept:
    cdef Py_ssize_t i
    if n == 0:
        return False
    for i in range(n):
        if not _digit(p[i]):
            return False
    return True


cdef inline long long _to_int(const unsigned char* p, Py_ssize_t n) noexcept:
    cdef long long v = 0
    cdef Py_ssize_t i
    for i in range(n):
        v = v * 10 + (p[i] - 48)
    return v


cdef int _month_number(const unsigned char* p, Py_ssize_t n):
    """Month 1-12 for a token (any case), or 0."""
    cdef Py_ssize_t i
    cdef int m
    cdef unsigned char a, b, c
    if n == 3:
        a = _low(p[0]); b = _low(p[1]); c = _low(p[2])
        for m in range(12):
            if (_MONTH3[m * 3] == <char>a and _MONTH3[m * 3 + 1] == <char>b
                    and _MONTH3[m * 3 + 2] == <char>c):
                return m + 1
        return 0
    if n < 3 or n > 9:
        return 0
    lowered = bytes([_low(p[i]) for i in range(n)])
    return _FULL_MONTHS_PY.get(lowered, 0)


cdef bint _is_weekday(const unsigned char* p, Py_ssize_t n):
    cdef Py_ssize_t i
    if n != 3 and (n < 6 or n > 9):
        return False
    lowered = bytes([_low(p[i]) for i in range(n)])
    return lowered in _WEEKDAYS_PY


cdef inline bint _is_sep(unsigned char c) noexcept:
    # str.split() whitespace (ASCII subset) plus the comma that trails
    # the weekday in the RFC forms.
    return (c == 32 or c == 9 or c == 10 or c == 13 or c == 12
            or c == 11 or c == 44)


def timestamp14_to_posix(s):
    """POSIX seconds for a YYYYMMDDHHMMSS UTC timestamp, or UNUSABLE."""
    try:
        data = s.encode("ascii")
    except UnicodeEncodeError:
        return UNUSABLE
    cdef const unsigned char* p = data
    cdef Py_ssize_t n = len(data)
    cdef long long y
    cdef int mo, d, h, mi, se
    if n != 14 or not _all_digits(p, n):
        return UNUSABLE
    y = _to_int(p, 4)
    mo = <int>_to_int(p + 4, 2)
    d = <int>_to_int(p + 6, 2)
    h = <int>_to_int(p + 8, 2)
    mi = <int>_to_int(p + 10, 2)
    se = <int>_to_int(p + 12, 2)
    if mo < 1 or mo > 12:
        return UNUSABLE
    if d < 1 or d > _days_in_month(y, mo):
        return UNUSABLE
    if h > 23 or mi > 59 or se > 59:
        return UNUSABLE
    return _days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + se


def http_date_to_posix(s):
    """POSIX seconds (UTC) for an HTTP date header value, or UNUSABLE.

    See ccseg._kernels.pure.http_date_to_posix for the accepted grammar.
    """
    try:
        data = s.encode("ascii")
    except UnicodeEncodeError:
        return UNUSABLE
    cdef const unsigned char* buf = data
    cdef Py_ssize_t nbuf = len(data)
    cdef Py_ssize_t i = 0, start, tn
    cdef const unsigned char* t
    cdef int day = 0, month = 0, hh = -1, mm = 0, ss = 0
    cdef long long year = -1
    cdef bint have_zone = False
    cdef long long zone = 0, off
    cdef int mo, zh, zm, ncolon, j
    cdef Py_ssize_t c1, c2, dash1, dash2, k

    while i < nbuf:
        while i < nbuf and _is_sep(buf[i]):
            i += 1
        if i >= nbuf:
            break
        start = i
        while i < nbuf and not _is_sep(buf[i]):
            i += 1
        t = buf + start
        tn = i - start

        if _is_weekday(t, tn):
            continue

        # zone words: gmt / ut / utc / z
        if tn == 3 and _low(t[0]) == 103 and _low(t[1]) == 109 and _low(t[2]) == 116:
            if have_zone and zone != 0:
                return UNUSABLE
            have_zone = True; zone = 0
            continue
        if tn == 2 and _low(t[0]) == 117 and _low(t[1]) == 116:
            if have_zone and zone != 0:
                return UNUSABLE
            have_zone = True; zone = 0
            continue
        if tn == 3 and _low(t[0]) == 117 and _low(t[1]) == 116 and _low(t[2]) == 99:
            if have_zone and zone != 0:
                return UNUSABLE
            have_zone = True; zone = 0
            continue
        if tn == 1 and _low(t[0]) == 122:
            if have_zone and zone != 0:
                return UNUSABLE
            have_zone = True; zone = 0
            continue

        if tn == 5 and (t[0] == 43 or t[0] == 45) and _all_digits(t + 1, 4):
            zh = <int>_to_int(t + 1, 2)
            zm = <int>_to_int(t + 3, 2)
            if zh > 23 or zm > 59:
                return UNUSABLE
            off = zh * 3600 + zm * 60
            if t[0] == 45:
                off = -off
            if have_zone and zone != off:
                return UNUSABLE
            have_zone = True; zone = off
            continue

        # time token hh:mm:ss
        ncolon = 0
        c1 = -1; c2 = -1
        for k in range(tn):
            if t[k] == 58:  # ':'
                ncolon += 1
                if ncolon == 1:
                    c1 = k
                elif ncolon == 2:
                    c2 = k
        if ncolon > 0:
            if hh >= 0 or ncolon != 2:
                return UNUSABLE
            if not (1 <= c1 <= 2 and 1 <= c2 - c1 - 1 <= 2 and 1 <= tn - c2 - 1 <= 2):
                return UNUSABLE
            if not (_all_digits(t, c1) and _all_digits(t + c1 + 1, c2 - c1 - 1)
                    and _all_digits(t + c2 + 1, tn - c2 - 1)):
                return UNUSABLE
            hh = <int>_to_int(t, c1)
            mm = <int>_to_int(t + c1 + 1, c2 - c1 - 1)
            ss = <int>_to_int(t + c2 + 1, tn - c2 - 1)
            if hh > 23 or mm > 59 or ss > 59:
                return UNUSABLE
            continue

        # RFC-850 compound date dd-Mon-yy / dd-Mon-yyyy
        dash1 = -1; dash2 = -1
        ncolon = 0
        for k in range(tn):
            if t[k] == 45:  # '-'
                ncolon += 1
                if ncolon == 1:
                    dash1 = k
                elif ncolon == 2:
                    dash2 = k
        if ncolon > 0:
            if ncolon != 2:
                return UNUSABLE
            mo = _month_number(t + dash1 + 1, dash2 - dash1 - 1)
            if (mo == 0 or not (1 <= dash1 <= 2) or not _all_digits(t, dash1)
                    or (tn - dash2 - 1 != 2 and tn - dash2 - 1 != 4)
                    or not _all_digits(t + dash2 + 1, tn - dash2 - 1)):
                return UNUSABLE
            if day or month or year >= 0:
                return UNUSABLE
            day = <int>_to_int(t, dash1)
            month = mo
            year = _to_int(t + dash2 + 1, tn - dash2 - 1)
            if tn - dash2 - 1 == 2:
                year = year + 1900 if year >= 70 else year + 2000
            continue

        if _all_digits(t, tn):
            if tn == 4:
                if year >= 0:
                    return UNUSABLE
                year = _to_int(t, tn)
            elif tn <= 2:
                if day == 0:
                    day = <int>_to_int(t, tn)
                elif year < 0:
                    year = _to_int(t, tn)
                    year = year + 1900 if year >= 70 else year + 2000
                else:
                    return UNUSABLE
            else:
                return UNUSABLE
            continue

        mo = _month_number(t, tn)
        if mo == 0 or month:
            return UNUSABLE
        month = mo
        continue

    if day == 0 or month == 0 or year < 0 or hh < 0:
        return UNUSABLE
    if day > _days_in_month(year, month):
        return UNUSABLE
    if not have_zone:
        zone = 0
    return _days_from_civil(year, month, day) * 86400 + hh * 3600 + mm * 60 + ss - zone


def count_pct_encoded(s):
    """(valid, stray) percent counts: %HH triplets vs lone '%' bytes."""
    try:
        data = s.encode("ascii")
    except UnicodeEncodeError:
        # Match the pure backend, which scans non-ASCII text directly:
        # '%' classification only involves ASCII neighbours either way.
        return _count_pct_str(s)
    cdef const unsigned char* p = data
    cdef Py_ssize_t n = len(data)
    cdef Py_ssize_t i = 0
    cdef long long valid = 0, stray = 0
    while i < n:
        if p[i] == 37:  # '%'
            if i + 2 < n and _hexd(p[i + 1]) and _hexd(p[i + 2]):
                valid += 1
                i += 3
                continue
            stray += 1
        i += 1
    return valid, stray


def _count_pct_str(s):
    cdef Py_ssize_t i = 0, n = len(s)
    cdef long long valid = 0, stray = 0
    while i < n:
        if s[i] == "%":
            if i + 2 < n and _ishex_py(s[i + 1]) and _ishex_py(s[i + 2]):
                valid += 1
                i += 3
                continue
            stray += 1
        i += 1
    return valid, stray


def _ishex_py(c):
    return "0" <= c <= "9" or "a" <= c <= "f" or "A" <= c <= "F"
