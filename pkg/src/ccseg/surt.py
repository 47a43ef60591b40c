"""Sort-friendly URI canonicalization: absolute http(s) URI -> urlkey.

The urlkey is the sort key of all index files.  The transform applies
five rules in order: drop the scheme, lowercase everything, drop one
leading "www." label, reverse the dot-separated authority labels (comma
joined, ")" terminated), and drop a path-final slash.

Corner-case policy (kept deliberately minimal and documented here rather
than copied from any production canonicalizer): the query is retained
verbatim apart from lowercasing, userinfo and fragments are removed, a
port stays attached to the reversed host before the ")", and non-ASCII
authorities pass through unchanged.
"""

from .errors import UsageError


class MissingScheme(UsageError):
    """URI does not start with http:// or https://."""


class EmptyAuthority(UsageError):
    """URI has no host to key on."""


def canonicalize(uri):
    """Return the urlkey for an absolute http(s) URI.

    >>> canonicalize("https://www.w3.org/TR/xml/")
    'org,w3)/tr/xml'
    """
    rest = _strip_scheme(uri)
    rest = rest.lower()

    # fragments never participate in the key
    hash_pos = rest.find("#")
    if hash_pos != -1:
        rest = rest[:hash_pos]

    authority, sep, tail = _split_authority(rest)
    if "@" in authority:
        authority = authority.rsplit("@", 1)[1]
    if authority.startswith("www."):
        authority = authority[4:]
    if not authority:
        raise EmptyAuthority(f"no host in {uri!r}")

    host, port = _split_port(authority)
    if not host:
        raise EmptyAuthority(f"no host in {uri!r}")
    key = ",".join(reversed(host.split(".")))
    if port:
        key += ":" + port
    key += ")"

    if sep == "?":
        path, query = "", tail
    elif sep == "/":
        path, _, query = ("/" + tail).partition("?")
    else:
        path, query = "", ""
    if path.endswith("/"):
        path = path[:-1]

    key += path
    if sep == "?" or query or (sep == "/" and "?" in tail):
        key += "?" + query
    return key


def _strip_scheme(uri):
    for scheme in ("http://", "https://"):
        if uri[: len(scheme)].lower() == scheme:
            return uri[len(scheme):]
    raise MissingScheme(f"not an absolute http(s) URI: {uri!r}")


def _split_authority(rest):
    """(authority, separator, tail) where separator is '/', '?' or ''."""
    for i, c in enumerate(rest):
        if c == "/" or c == "?":
            return rest[:i], c, rest[i + 1:]
    return rest, "", ""


def _split_port(authority):
    if authority.startswith("["):  # bracketed IPv6 literal
        close = authority.find("]")
        if close != -1:
            host = authority[: close + 1]
            rest = authority[close + 1:]
            if rest.startswith(":"):
                return host, rest[1:]
            return host, ""
    colon = authority.rfind(":")
    if colon != -1 and authority[colon + 1:].isdigit():
        return authority[:colon], authority[colon + 1:]
    if authority.endswith(":"):  # bare colon, no port digits
        return authority[:-1], ""
    return authority, ""
