from pathlib import Path
from typing import Iterator, List, Tuple, Union

PathLike = Union[str, Path]


def read_text(path: PathLike) -> str:
    """Read a UTF-8 text file."""
    with open(path, 'r', encoding='utf-8') as f:
        return f.read()


def write_output(output_file: PathLike, lines: List[str]) -> None:
    """Write lines to output_file with LF endings and a final newline."""
    with open(output_file, 'w', encoding='utf-8', newline='\n') as f:
        f.write(''.join(line + '\n' for line in lines))


def numbered_tokens(text: str) -> Iterator[Tuple[int, List[str]]]:
    """Yield (line number, tokens) for every line with content; '#' starts a comment."""
    for number, line in enumerate(text.splitlines(), start=1):
        tokens = line.split('#', 1)[0].split()
        if tokens:
            yield number, tokens


def resolve_relative(anchor: PathLike, reference: str) -> Path:
    """Resolve reference against the directory holding anchor."""
    target = Path(reference)
    return target if target.is_absolute() else Path(anchor).parent / target
