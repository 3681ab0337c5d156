# Character-buffer widgets for printing result tables on a terminal.
#
# Copyright (C) 2024  The slcim authors
#
# This program is free software; you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation; either version 2 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <http://www.gnu.org/licenses/>.
#

__all__ = ["Widget", "TextWidget", "ColumnWidget", "TableWidget"]

from textwrap import wrap

from slcim.utils import ensure_str


class Widget(object):
    """A rectangular buffer of characters with a writing cursor."""

    def __init__(self):
        self._buffer = []
        self._cursor = (0, 0)  # row, col

    @property
    def height(self):
        return len(self._buffer)

    @property
    def width(self):
        """Id of the first column that is empty in every row."""
        return max((len(line) for line in self._buffer), default=0)

    @property
    def content(self):
        return self._buffer

    def clear(self):
        self._buffer = []
        self._cursor = (0, 0)

    def render(self, width):
        """Redraw the buffer for the given width; subclasses draw after calling this."""
        self.clear()

    def get_lines(self):
        """Return the rendered lines without trailing spaces.

        :rtype: list(str)
        """
        return [u"".join(line).rstrip() for line in self._buffer]

    def _ensure(self, row, col):
        while len(self._buffer) <= row:
            self._buffer.append([])
        line = self._buffer[row]
        if len(line) < col:
            line += (col - len(line)) * [u" "]

    def write(self, text, row=None, col=None):
        """Type `text` starting at row, col (the cursor by default).

        Newlines continue at the starting column of the next row.
        """
        text = ensure_str(text)
        row = self._cursor[0] if row is None else row
        col = self._cursor[1] if col is None else col

        for n, part in enumerate(text.split("\n")):
            self._ensure(row + n, col + len(part))
            self._buffer[row + n][col:col + len(part)] = list(part)
        self._cursor = (row + text.count("\n") + 1, col)

    def draw(self, w, row=None, col=None):
        """Copy the content of widget `w` into this buffer at row, col."""
        row = self._cursor[0] if row is None else row
        col = self._cursor[1] if col is None else col
        for n, line in enumerate(w.content):
            self._ensure(row + n, col + len(line))
            self._buffer[row + n][col:col + len(line)] = line
        self._cursor = (row + w.height, col)


class TextWidget(Widget):
    """Text wrapped by words at the render width."""

    def __init__(self, text):
        super().__init__()
        self._text = text

    def render(self, width):
        super().render(width)
        lines = []
        for paragraph in ensure_str(self._text).rstrip("\n").split("\n"):
            lines += wrap(paragraph, width) or [u""]
        self.write("\n".join(lines), 0, 0)


class ColumnWidget(Widget):
    """Widgets stacked in side-by-side columns."""

    def __init__(self, columns, spacing=0):
        """
        :param columns: list containing (column width, [list of widgets to put into this column])
        :type columns: [(int, [...]), ...]

        :param spacing: number of spaces to use between columns
        :type spacing: int
        """
        super().__init__()
        self._columns = columns
        self._spacing = spacing

    def render(self, width):
        super().render(width)
        x = 0
        for col_width, items in self._columns:
            self._cursor = (0, x)
            for item in items:
                item.render(col_width)
                self.draw(item)
            x += col_width + self._spacing


class TableWidget(Widget):
    """Numeric table with a header row and right-aligned values."""

    def __init__(self, header, rows, precision=1, title=None):
        """
        :param header: column names
        :type header: sequence of str

        :param rows: table cells, floats are printed with `precision` decimals
        :type rows: sequence of sequences

        :param title: optional line printed above the table
        :type title: str
        """
        super().__init__()
        self._header = [str(h) for h in header]
        self._rows = rows
        self._precision = precision
        self._title = title

    def _format(self, value):
        if isinstance(value, float):
            return "%.*f" % (self._precision, value)
        return str(value)

    def render(self, width):
        super().render(width)
        cells = [self._header] + [[self._format(v) for v in row] for row in self._rows]
        widths = [max(len(row[n]) for row in cells) for n in range(len(self._header))]

        row = 0
        if self._title:
            title = TextWidget(self._title)
            title.render(width)
            self.draw(title, 0, 0)
            row = self.height

        for n, line in enumerate(cells):
            # first column is a label, the others are values
            text = "  ".join(cell.ljust(w) if i == 0 else cell.rjust(w)
                             for i, (cell, w) in enumerate(zip(line, widths)))
            self.write(text, row, 0)
            row += 1
            if n == 0:
                self.write("-" * len(text), row, 0)
                row += 1
