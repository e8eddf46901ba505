// Payload shapes of the /api/v1 surface.

export type ValueJson =
  | {kind: "text"; text: string}
  | {kind: "richtext"; markup: string}
  | {kind: "number"; value: string}
  | {kind: "term"; vocab: string; id: string; label: string}
  | {kind: "concept"; thesaurus: string; id: string; label: string}
  | {kind: "link"; type: string; id: string; label: string}
  | {kind: "time"; expr: string; earliest?: number; latest?: number}
  | {kind: "geo"; geometry: "point" | "polygon"; points: [number, number][]}
  | {kind: "place"; source: string; id: string; lat: number; lon: number}
  | {kind: "file"; ref: string; media: string};

export type EntityJson = {
  id: string;
  type: string;
  org: string;
  creator: string;
  status: "unpublished" | "pending" | "published";
  schemaVersion: number;
  revision: number;
  values: {[path: string]: ValueJson};
};

export type FieldNode = {
  field: string;
  kind: string;
  label: string;
  multiple: boolean;
  required: boolean;
  targets?: string[];
  vocab?: string;
  mode?: "static" | "dynamic";
  thesaurus?: string;
  media?: string[];
};

export type GroupNode = {
  group: string;
  multiple: boolean;
  children: SchemaNode[];
};

export type SchemaNode = GroupNode | FieldNode;

export type SchemaJson = {
  type: string;
  version: number;
  root: GroupNode;
  summaryColumns: string[];
  mapPointFields: string[];
};

export function isGroup(node: SchemaNode): node is GroupNode {
  return (node as GroupNode).group !== undefined;
}

export type RowJson = {
  id: string;
  status: string;
  creator: string;
  cells: {[path: string]: string};
};

export type PredicateJson = {
  op: "equals" | "contains" | "term_is" | "links_to" | "date_within"
    | "date_overlaps" | "status_is" | "type_is";
  path?: string;
  text?: string;
  term?: string;
  entity?: string;
  expr?: string;
  earliest?: number;
  latest?: number;
  status?: string;
  type?: string;
};

export type ParsedDate = {
  expr: string;
  ast: string;
  earliest: number;
  latest: number;
};

export type MapFeatureJson = {
  kind: "point" | "line" | "line-set";
  geometry: unknown;
  popup: {[path: string]: string};
  entity: string;
  degenerate: boolean;
};

export type FeatureCollectionJson = {
  features: MapFeatureJson[];
  unresolved: {entity: string; reason: string}[];
};

export type EditJson = {path: string; value: ValueJson | null};
