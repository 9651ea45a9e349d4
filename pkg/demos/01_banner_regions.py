"""Walk through banner parsing: cleaning, tokenization, and the visual
regions that decide which perturbations are legal where.

Run: python demos/01_banner_regions.py
"""

import bannercloak as bc

RAW_HTTP = (
    "HTTP/1.1 200 OK\r\n"
    "Server:   Boa/0.94.14rc21\r\n"
    "Content-Type: text/html\r\n"
    "\r\n"
    "<html><head><title>D-Link DCS-932L camera</title>"
    "<style>body { color: #333; } /* ui theme */</style></head>"
    "<body><h1>DCS-932L setup</h1>"
    "<p>welcome to the d-link surveillance configuration interface.</p>"
    "<!-- generated by boa --></body></html>\r\n"
)

RAW_FTP = "220 ProFTPD Server ready.\r\n331 please specify the password.\r\n"


def show(banner: bc.Banner) -> None:
    clean = bc.preprocess(banner.raw, banner.protocol)
    tokenized = bc.partition_regions(
        bc.Banner(banner.id, banner.protocol, clean, banner.labels)
    )
    print(f"--- {banner.protocol.upper()} banner, {len(tokenized.tokens)} tokens ---")
    for token in tokenized.tokens:
        marker = {"IMR": "locked", "FR": "visual-only", "NFR": "free"}[token.region]
        print(f"  {token.index:3d}  {token.region:<3}  {marker:<11}  {token.text}")
    print()


def main() -> None:
    print("Cleaning normalizes line endings and whitespace but never touches")
    print("the perturbation code points:")
    print(repr(bc.preprocess("Server:   Boa/0.94\r\n")))
    print()

    show(bc.Banner("http-demo", "http", RAW_HTTP))
    show(bc.Banner("ftp-demo", "ftp", RAW_FTP))

    print("IMR tokens live inside markup (tags, CSS, script): editing them")
    print("would break rendering, so attacks skip them.  FR tokens are what")
    print("the user reads (title, headings): only invisible Unicode edits are")
    print("allowed there.  Everything else is NFR, where word substitutions")
    print("are fair game.")


if __name__ == "__main__":
    main()
