// Advanced-search builder: turns UI selections into exactly the predicate
// JSON the server executes. The field pickers are constrained by the
// schema so no invalid query can be submitted.

import type {FieldNode, PredicateJson, SchemaJson, SchemaNode} from "./types.js";
import {isGroup} from "./types.js";

export type QueryField = {
  path: string;
  label: string;
  kind: string;
  vocab?: string;
  thesaurus?: string;
  targets?: string[];
};

// which predicate operators each field kind supports
const OPS_BY_KIND: {[kind: string]: PredicateJson["op"][]} = {
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

export function queryableFields(schema: SchemaJson): QueryField[] {
  const out: QueryField[] = [];
  const walk = (nodes: SchemaNode[], prefix: string) => {
    for (const node of nodes) {
      if (isGroup(node)) {
        walk(node.children, prefix ? `${prefix}/${node.group}` : node.group);
        continue;
      }
      const field = node as FieldNode;
      if (!(OPS_BY_KIND[field.kind] ?? []).length) continue;
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

export function operatorsFor(field: QueryField): PredicateJson["op"][] {
  return OPS_BY_KIND[field.kind] ?? [];
}

export type Selection =
  | {op: "equals" | "contains"; field: QueryField; text: string}
  | {op: "term_is"; field: QueryField; termId: string}
  | {op: "links_to"; field: QueryField | null; entityId: string}
  | {op: "date_within" | "date_overlaps"; field: QueryField; expr: string}
  | {op: "status_is"; status: string};

export class QueryBuildError extends Error {}

function checkOperator(selection: {op: PredicateJson["op"]},
                       field: QueryField | null): void {
  if (field === null) return;
  if (!(OPS_BY_KIND[field.kind] ?? []).includes(selection.op)) {
    throw new QueryBuildError(
      `${selection.op} is not available on a ${field.kind} field`);
  }
}

/** Emit the server's predicate JSON, one conjunct per selection. */
export function buildQuery(selections: Selection[]): PredicateJson[] {
  const predicates: PredicateJson[] = [];
  for (const selection of selections) {
    switch (selection.op) {
      case "equals":
      case "contains":
        checkOperator(selection, selection.field);
        if (!selection.text) throw new QueryBuildError("text required");
        predicates.push({op: selection.op, path: selection.field.path,
                         text: selection.text});
        break;
      case "term_is":
        checkOperator(selection, selection.field);
        if (!selection.termId) throw new QueryBuildError("term required");
        predicates.push({op: "term_is", path: selection.field.path,
                         term: selection.termId});
        break;
      case "links_to":
        if (selection.field) checkOperator(selection, selection.field);
        if (!selection.entityId) throw new QueryBuildError("entity required");
        predicates.push(selection.field
          ? {op: "links_to", path: selection.field.path, entity: selection.entityId}
          : {op: "links_to", entity: selection.entityId});
        break;
      case "date_within":
      case "date_overlaps":
        checkOperator(selection, selection.field);
        if (!selection.expr) throw new QueryBuildError("time expression required");
        predicates.push({op: selection.op, path: selection.field.path,
                         expr: selection.expr});
        break;
      case "status_is":
        predicates.push({op: "status_is", status: selection.status});
        break;
    }
  }
  return predicates;
}
