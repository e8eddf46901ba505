// Advanced-search builder: turns UI selections into exactly the predicate
// JSON the server executes. The field pickers are constrained by the
// schema so no invalid query can be submitted.
import { isGroup } from "./types.js";
// which predicate operators each field kind supports
const OPS_BY_KIND = {
    "text-plain": ["equals", "contains"],
    "text-formatted": ["equals", "contains"],
    "number": ["equals", "contains"],
    "time-expression": ["date_within", "date_overlaps"],
    "vocab-term": ["term_is", "contains"],
    "thesaurus-term": ["term_is", "contains"],
    "entity-link": ["links_to", "contains"],
    "geo-external-id": ["contains"],
    "geo-coordinates": [],
    "digital-file": [],
};
export function queryableFields(schema) {
    const out = [];
    const walk = (nodes, prefix) => {
        for (const node of nodes) {
            if (isGroup(node)) {
                walk(node.children, prefix ? `${prefix}/${node.group}` : node.group);
                continue;
            }
            const field = node;
            if (!(OPS_BY_KIND[field.kind] ?? []).length)
                continue;
            out.push({
                path: prefix ? `${prefix}/${field.field}` : field.field,
                label: field.label,
                kind: field.kind,
                vocab: field.vocab,
                thesaurus: field.thesaurus,
                targets: field.targets,
            });
        }
    };
    walk(schema.root.children, "");
    return out;
}
export function operatorsFor(field) {
    return OPS_BY_KIND[field.kind] ?? [];
}
export class QueryBuildError extends Error {
}
function checkOperator(selection, field) {
    if (field === null)
        return;
    if (!(OPS_BY_KIND[field.kind] ?? []).includes(selection.op)) {
        throw new QueryBuildError(`${selection.op} is not available on a ${field.kind} field`);
    }
}
/** Emit the server's predicate JSON, one conjunct per selection. */
export function buildQuery(selections) {
    const predicates = [];
    for (const selection of selections) {
        switch (selection.op) {
            case "equals":
            case "contains":
                checkOperator(selection, selection.field);
                if (!selection.text)
                    throw new QueryBuildError("text required");
                predicates.push({ op: selection.op, path: selection.field.path,
                    text: selection.text });
                break;
            case "term_is":
                checkOperator(selection, selection.field);
                if (!selection.termId)
                    throw new QueryBuildError("term required");
                predicates.push({ op: "term_is", path: selection.field.path,
                    term: selection.termId });
                break;
            case "links_to":
                if (selection.field)
                    checkOperator(selection, selection.field);
                if (!selection.entityId)
                    throw new QueryBuildError("entity required");
                predicates.push(selection.field
                    ? { op: "links_to", path: selection.field.path, entity: selection.entityId }
                    : { op: "links_to", entity: selection.entityId });
                break;
            case "date_within":
            case "date_overlaps":
                checkOperator(selection, selection.field);
                if (!selection.expr)
                    throw new QueryBuildError("time expression required");
                predicates.push({ op: selection.op, path: selection.field.path,
                    expr: selection.expr });
                break;
            case "status_is":
                predicates.push({ op: "status_is", status: selection.status });
                break;
        }
    }
    return predicates;
}
