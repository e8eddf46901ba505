// Client-side live table filter. Must stay semantically identical to the
// server's row filter: case-insensitive substring over exactly what the
// table shows (id, status, creator and the summary cells).
export function rowMatches(row, filterText) {
    if (!filterText)
        return true;
    const needle = filterText.toLowerCase();
    const haystack = [row.id, row.status, row.creator,
        ...Object.values(row.cells)];
    return haystack.some(cell => cell.toLowerCase().includes(needle));
}
export function filterRows(rows, filterText) {
    return rows.filter(row => rowMatches(row, filterText));
}
