function freshState() {
    return {
        points: [],
        flagged: new Set(),
        vocab: [],
        indexSize: 0,
        selectedId: null,
        neighbors: [],
        k: 5,
        kMax: 1,
        showFlaggedOnly: false,
        classifyResult: null,
        banner: null,
        toast: null,
        ready: false,
    };
}
/** Single source of truth for the audit view.
 *
 * Mutations are optimistic: the local state changes immediately, the server
 * confirms, and a failure rolls the change back with a toast. Neighbor
 * panels are never sorted or recomputed locally; every change of selection
 * or k re-queries the service.
 */
export class AuditStore {
    constructor(api) {
        this.api = api;
        this.state = freshState();
        this.listeners = [];
        this.selectToken = 0;
        this.inflightKey = null;
    }
    subscribe(listener) {
        this.listeners.push(listener);
        return () => {
            this.listeners = this.listeners.filter((l) => l !== listener);
        };
    }
    emit() {
        for (const listener of this.listeners) {
            listener(this.state);
        }
    }
    async init() {
        try {
            const meta = await this.api.meta();
            const points = await this.api.projection();
            this.state.vocab = meta.vocab;
            this.state.indexSize = meta.index_size;
            this.state.kMax = Math.max(1, meta.index_size - 1);
            this.state.k = Math.min(meta.k, this.state.kMax);
            this.state.points = points;
            this.state.banner = null;
            this.state.ready = true;
            await this.refreshFlags();
        }
        catch (err) {
            this.state.banner = `service unavailable: ${messageOf(err)}`;
            this.state.ready = false;
        }
        this.emit();
    }
    async refreshFlags() {
        try {
            const flags = await this.api.anomalies("label_inconsistency");
            this.state.flagged = new Set(flags.flatMap((f) => f.doc_ids));
        }
        catch {
            this.state.flagged = new Set();
        }
    }
    /** Select a doc and fetch its neighbor panel. Rapid duplicate clicks are
     * de-duplicated; a stale response never overwrites a newer selection. */
    async select(id) {
        const key = `${id}:${this.state.k}`;
        if (this.inflightKey === key) {
            return;
        }
        this.state.selectedId = id;
        this.emit();
        const token = ++this.selectToken;
        this.inflightKey = key;
        try {
            const rows = await this.api.neighbors(id, this.state.k);
            if (token === this.selectToken) {
                this.state.neighbors = rows;
            }
        }
        catch (err) {
            if (token === this.selectToken) {
                this.state.neighbors = [];
                this.state.toast = messageOf(err);
            }
        }
        finally {
            if (this.inflightKey === key) {
                this.inflightKey = null;
            }
            this.emit();
        }
    }
    /** Clamp k to the server-reported bounds and re-query the open panel. */
    async setK(k) {
        const clamped = Math.max(1, Math.min(Math.round(k), this.state.kMax));
        if (clamped === this.state.k) {
            return;
        }
        this.state.k = clamped;
        this.emit();
        if (this.state.selectedId !== null) {
            this.inflightKey = null;
            await this.select(this.state.selectedId);
        }
    }
    setFlaggedOnly(on) {
        this.state.showFlaggedOnly = on;
        this.emit();
    }
    async classify(text) {
        try {
            this.state.classifyResult = await this.api.classify(text, this.state.k);
            this.state.toast = null;
        }
        catch (err) {
            this.state.classifyResult = null;
            this.state.toast = messageOf(err);
        }
        this.emit();
    }
    /** Add a labeled doc; a new label extends the legend immediately. */
    async addDocument(text, label) {
        const hadLabel = this.state.vocab.includes(label);
        const sizeBefore = this.state.indexSize;
        if (!hadLabel) {
            this.state.vocab = [...this.state.vocab, label];
        }
        this.state.indexSize = sizeBefore + 1;
        this.emit();
        try {
            const resp = await this.api.addDocument(text, label);
            this.state.indexSize = resp.index_size;
            this.state.kMax = Math.max(1, resp.index_size - 1);
            this.state.toast = null;
            await this.refreshProjection();
            return true;
        }
        catch (err) {
            if (!hadLabel) {
                this.state.vocab = this.state.vocab.filter((v) => v !== label);
            }
            this.state.indexSize = sizeBefore;
            this.state.toast = `add failed: ${messageOf(err)}`;
            this.emit();
            return false;
        }
    }
    /** Relabel the selected doc, optimistically recoloring its point. */
    async relabel(id, label) {
        const point = this.state.points.find((p) => p.id === id);
        const oldLabel = point?.label;
        const hadLabel = this.state.vocab.includes(label);
        if (point) {
            point.label = label;
        }
        if (!hadLabel) {
            this.state.vocab = [...this.state.vocab, label];
        }
        this.emit();
        try {
            await this.api.relabel(id, label);
            this.state.toast = null;
            if (this.state.selectedId !== null) {
                this.inflightKey = null;
                await this.select(this.state.selectedId);
            }
            this.emit();
            return true;
        }
        catch (err) {
            if (point && oldLabel !== undefined) {
                point.label = oldLabel;
            }
            if (!hadLabel) {
                this.state.vocab = this.state.vocab.filter((v) => v !== label);
            }
            this.state.toast = `relabel failed: ${messageOf(err)}`;
            this.emit();
            return false;
        }
    }
    async refreshProjection() {
        try {
            this.state.points = await this.api.projection();
            await this.refreshFlags();
        }
        catch (err) {
            this.state.toast = messageOf(err);
        }
        this.emit();
    }
}
function messageOf(err) {
    return err instanceof Error ? err.message : String(err);
}
