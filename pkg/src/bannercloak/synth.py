"""Synthetic IoT banner corpus and ruleset generation.

Banners come from parameterized templates of real-world shapes: embedded
HTTP servers serving small login pages, and FTP greeting blocks.  Each
template family carries a (type, manufacturer, product) label triple and
decides where the product keyword surfaces -- in focus text (title,
headings), in non-focus text (header values, paragraphs), or both -- which
is what makes the region-aware attacks exercise all their paths.  Label
frequencies follow a long tail; everything is deterministic under a seed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .core import Banner, DataError, Labels
from .scanners import MatchRuleset, Rule


@dataclass(frozen=True)
class Family:
    device_type: str
    manufacturer: str
    product: str
    server: str
    style: str  # where the product keyword appears: "title" | "body" | "both"
    ftp_share: float = 0.0

    @property
    def fw_tag(self) -> str:
        return f"fw-{short_name(self.manufacturer)}"

    def labels(self) -> Labels:
        return Labels(type=self.device_type, manufacturer=self.manufacturer, product=self.product)


def short_name(manufacturer: str) -> str:
    return re.sub(r"[^a-z0-9]", "", manufacturer.lower())


# Styles place the product keyword: "title" puts it in focus text only,
# "body" in non-focus text only, "both" in one of each, "server" appends it
# to the Server header value, "header" leads the Server value with it (plus
# the title).  Server strings are deliberately shared across unrelated
# families where realistic, the way embedded httpd builds are reused across
# vendors.
BASE_FAMILIES = [
    Family("camera", "d-link", "dcs-932l", "Boa/0.94.14rc21", "server"),
    Family("camera", "d-link", "dcs-930l", "Boa/0.94.14rc21", "server"),
    Family("router", "tp-link", "tl-wr841nd", "httpd/1.0", "title"),
    Family("router", "tp-link", "tl-wr941nd", "httpd/1.0", "title"),
    Family("router", "netgear", "wnr2000", "httpd/2.4", "header"),
    Family("camera", "hikvision", "ds-2cd2032", "App-webs/1.0", "server"),
    Family("printer", "hp", "laserjet-p1102w", "HP-ChaiSOE/1.0", "header"),
    Family("nas", "synology", "ds212j", "nginx/1.14.2", "body", ftp_share=0.35),
    Family("router", "asus", "rt-n12", "httpd/1.0", "header"),
    Family("camera", "axis", "m1054", "Boa/0.92o", "body", ftp_share=0.30),
]

TYPE_WORDS = {
    "camera": ["surveillance", "video stream", "motion detection", "ip camera", "lens control"],
    "router": ["wireless", "access point", "wan status", "dhcp leases", "port forwarding"],
    "printer": ["print queue", "toner status", "page counter", "spooler"],
    "nas": ["storage pool", "raid volume", "disk station", "backup schedule"],
}

TITLE_WORDS = ["administration", "web manager", "setup wizard", "device status", "control panel"]

BOILERPLATE = [
    "please enter your username and password to continue",
    "all rights reserved",
    "unauthorized access to this device is prohibited",
    "remember to change the default credentials after setup",
    "for assistance contact your network administrator",
    "this page works best with javascript enabled",
    "your session will expire after ten minutes of inactivity",
    "use a modern browser for the best experience",
    "event logs are stored on the internal flash memory",
    "remote management is disabled by default",
    "check the vendor site for firmware updates",
    "the quick setup guide covers initial installation",
]

_MONTHS = ["jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec"]
_DAYS = ["mon", "tue", "wed", "thu", "fri", "sat", "sun"]


def make_families(count: int) -> list[Family]:
    """The base families plus procedurally derived sibling products."""
    if count <= len(BASE_FAMILIES):
        return list(BASE_FAMILIES[:count])
    families = list(BASE_FAMILIES)
    j = 0
    while len(families) < count:
        base = BASE_FAMILIES[j % len(BASE_FAMILIES)]
        bump = j // len(BASE_FAMILIES) + 1

        def _advance(m: re.Match) -> str:
            return str(int(m.group()) + 10 * bump)

        product = re.sub(r"\d+", _advance, base.product, count=1)
        families.append(
            Family(
                base.device_type,
                base.manufacturer,
                product,
                base.server,
                base.style,
                base.ftp_share,
            )
        )
        j += 1
    return families


def _pick(rng: np.random.Generator, options: list[str]) -> str:
    return options[int(rng.integers(len(options)))]


def _date(rng: np.random.Generator) -> str:
    return (
        f"{_pick(rng, _DAYS)}, {int(rng.integers(1, 29)):02d} {_pick(rng, _MONTHS)} "
        f"{int(rng.integers(2019, 2026))} {int(rng.integers(24)):02d}:"
        f"{int(rng.integers(60)):02d}:{int(rng.integers(60)):02d} GMT"
    )


def _hex(rng: np.random.Generator, digits: int) -> str:
    return "".join("0123456789abcdef"[int(rng.integers(16))] for _ in range(digits))


def _render_http(family: Family, rng: np.random.Generator) -> str:
    product_upper = family.product.upper()
    brand = family.manufacturer.title()
    type_word = _pick(rng, TYPE_WORDS[family.device_type])
    title_word = _pick(rng, TITLE_WORDS)
    boiler1 = _pick(rng, BOILERPLATE)
    boiler2 = _pick(rng, BOILERPLATE)
    fwver = f"{int(rng.integers(1, 4))}.{int(rng.integers(10, 99))}.{int(rng.integers(10, 99))}"

    server_value = family.server
    if family.style == "title":
        title = f"{brand} {product_upper} {title_word}"
        heading = f"device {_pick(rng, TITLE_WORDS)}"
        intro = f"welcome to the {family.manufacturer} {type_word} configuration interface"
    elif family.style == "body":
        title = f"{brand} {title_word}"
        heading = f"device {_pick(rng, TITLE_WORDS)}"
        intro = (
            f"welcome to the {family.product} {type_word} configuration "
            f"interface by {family.manufacturer}"
        )
    elif family.style == "header":
        server_value = f"{product_upper} {family.server}"
        title = f"{brand} {product_upper} {title_word}"
        heading = f"device {_pick(rng, TITLE_WORDS)}"
        intro = f"welcome to the {family.manufacturer} {type_word} configuration interface"
    elif family.style == "server":
        server_value = f"{family.server} ({product_upper})"
        title = f"{brand} {title_word}"
        heading = f"device {_pick(rng, TITLE_WORDS)}"
        intro = f"welcome to the {family.manufacturer} {type_word} configuration interface"
    else:  # both
        title = f"{brand} {product_upper} {title_word}"
        heading = f"device {_pick(rng, TITLE_WORDS)}"
        intro = (
            f"welcome to the {family.product} {type_word} configuration "
            f"interface by {family.manufacturer}"
        )

    return (
        "HTTP/1.1 200 OK\r\n"
        f"Server: {server_value}\r\n"
        f"Date: {_date(rng)}\r\n"
        "Content-Type: text/html; charset=utf-8\r\n"
        "Connection: keep-alive\r\n"
        "\r\n"
        "<html>\n<head>\n"
        '<meta charset="utf-8">\n'
        f"<title>{title}</title>\n"
        f"<style>body {{ background: #{_hex(rng, 6)}; margin: 0; }} "
        f"/* ui theme rev {int(rng.integers(1, 60))} */</style>\n"
        f"<script>var uptime={int(rng.integers(1, 900000))}; "
        f"var port={_pick(rng, ['80', '8080', '81'])};</script>\n"
        "</head>\n<body>\n"
        f"<h1>{heading}</h1>\n"
        f"<p>{intro}. {boiler1}.</p>\n"
        f"<span>firmware {family.fw_tag}-{fwver} build {int(rng.integers(1000, 9999))}</span>\n"
        f"<p>{boiler2}. session {_hex(rng, 8)}.</p>\n"
        f"<!-- {type_word} page generated by {family.server.split('/')[0].lower()} -->\n"
        '<form method="post" action="/login.cgi"><input name="username">'
        '<input name="password" type="password"></form>\n'
        "</body>\n</html>\n"
    )


def _render_ftp(family: Family, rng: np.random.Generator) -> str:
    type_word = _pick(rng, TYPE_WORDS[family.device_type])
    boiler = _pick(rng, BOILERPLATE)
    fwver = f"{int(rng.integers(1, 4))}.{int(rng.integers(10, 99))}"
    return (
        f"220 {family.manufacturer} {family.product} ftp service ready.\r\n"
        f"220 firmware {family.fw_tag}-{fwver} uptime {int(rng.integers(1, 9000))} hours. "
        f"{boiler}.\r\n"
        f"220 use your {type_word} account to login. session {_hex(rng, 8)}.\r\n"
    )


def gen_corpus(n: int, n_labels: int = 10, seed: int = 0) -> list[Banner]:
    """Generate ``n`` labeled banners over ``n_labels`` product families with
    long-tail label frequencies (every label occurs at least twice)."""
    if n_labels < 1:
        raise DataError("need at least one label family")
    if n < 2 * n_labels:
        raise DataError(f"need n >= {2 * n_labels} banners for {n_labels} labels (2 per label)")
    families = make_families(n_labels)
    rng = np.random.default_rng(seed)

    # Long-tail label frequencies; sibling models of one product line ship in
    # comparable volumes, so the first two ranks are tied.
    weights = np.array([1.0 / max(i, 1) ** 0.7 for i in range(n_labels)])
    weights /= weights.sum()
    assignment = list(range(n_labels)) * 2  # floor of two banners per label
    extra = rng.choice(n_labels, size=n - len(assignment), p=weights)
    assignment.extend(int(i) for i in extra)
    order = rng.permutation(len(assignment))

    banners = []
    for serial, pos in enumerate(order):
        family = families[assignment[int(pos)]]
        protocol = "ftp" if rng.random() < family.ftp_share else "http"
        raw = _render_ftp(family, rng) if protocol == "ftp" else _render_http(family, rng)
        banners.append(
            Banner(id=f"b{serial:06d}", protocol=protocol, raw=raw, labels=family.labels())
        )
    return banners


def gen_ruleset(n_labels: int = 10, n_rules: int | None = None) -> MatchRuleset:
    """Derive a matching-scanner ruleset from the template families, ordered
    most-specific first: product rules, then manufacturer, then type.

    Sibling products of one manufacturer/type line share a model-series rule
    (an alternation pattern), the way real probe databases match a model
    series rather than one exact string."""
    families = make_families(n_labels)
    manufacturers: dict[str, None] = {}
    types: dict[str, None] = {}
    groups: dict[tuple[str, str], list[Family]] = {}
    for fam in families:
        manufacturers.setdefault(fam.manufacturer)
        types.setdefault(fam.device_type)
        groups.setdefault((fam.manufacturer, fam.device_type), []).append(fam)

    rules: list[Rule] = []
    for (manu, _), fams in groups.items():
        products = sorted(f.product for f in fams)
        if len(products) == 1:
            label = f"{manu} {products[0]}"
            rules.append(Rule(products[0], "literal", label, "product"))
            rules.append(Rule(rf"(?i)\b{re.escape(products[0])}\b", "regex", label, "product"))
            title_pat = rf"(?i)<title>[^<]*{re.escape(products[0])}"
        else:
            prefix = products[0]
            for p in products[1:]:
                while not p.startswith(prefix):
                    prefix = prefix[:-1]
            label = f"{manu} {prefix}*" if prefix else f"{manu} series"
            alternation = "|".join(re.escape(p) for p in products)
            rules.append(Rule(rf"(?i)\b(?:{alternation})\b", "regex", label, "product"))
            title_pat = rf"(?i)<title>[^<]*(?:{alternation})"
        rules.append(Rule(title_pat, "regex", label, "product"))
    for manu in manufacturers:
        rules.append(Rule(manu, "literal", manu, "manufacturer"))
    for manu in manufacturers:
        rules.append(Rule(rf"(?i)fw-{short_name(manu)}[\w.\-]*", "regex", manu, "manufacturer"))
    type_patterns = {
        "camera": r"(?i)(surveillance|motion detection|ip camera)",
        "router": r"(?i)(access point|wan status|dhcp leases)",
        "printer": r"(?i)(print queue|toner status|spooler)",
        "nas": r"(?i)(raid volume|disk station|storage pool)",
    }
    for dev_type in types:
        rules.append(Rule(type_patterns[dev_type], "regex", dev_type, "type"))

    if n_rules is not None:
        if n_rules <= len(rules):
            rules = rules[:n_rules]
        else:
            pad = 0
            while len(rules) < n_rules:
                fam = families[pad % len(families)]
                rules.append(
                    Rule(
                        rf"(?i){re.escape(fam.fw_tag)}-{pad // len(families) + 1}\.\d+",
                        "regex",
                        fam.manufacturer,
                        "manufacturer",
                    )
                )
                pad += 1
    return MatchRuleset(rules=rules, source="synthetic")
