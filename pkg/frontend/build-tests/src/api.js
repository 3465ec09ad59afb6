export class ApiError extends Error {
    constructor(status, message) {
        super(message);
        this.status = status;
        this.name = "ApiError";
    }
}
/** Thin typed client over the service endpoints. The UI never computes
 * distances or votes itself; everything flows through here. */
export class ApiClient {
    constructor(base = "", fetchFn = (input, init) => fetch(input, init)) {
        this.base = base;
        this.fetchFn = fetchFn;
    }
    async request(path, init) {
        let resp;
        try {
            resp = await this.fetchFn(this.base + path, init);
        }
        catch (err) {
            throw new ApiError(0, `service unreachable: ${String(err)}`);
        }
        const body = (await resp.json().catch(() => ({})));
        if (!resp.ok) {
            const message = typeof body.error === "string" ? body.error : resp.statusText;
            throw new ApiError(resp.status, message);
        }
        return body;
    }
    post(path, payload) {
        return this.request(path, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(payload),
        });
    }
    meta() {
        return this.request("/meta");
    }
    async projection() {
        const body = await this.request("/projection");
        return body.points;
    }
    async neighbors(id, k) {
        const body = await this.request(`/neighbors?id=${id}&k=${k}`);
        return body.neighbors;
    }
    classify(text, k) {
        return this.post("/classify", k === undefined ? { text } : { text, k });
    }
    addDocument(text, label) {
        return this.post("/documents", { text, label });
    }
    relabel(id, label) {
        return this.post("/relabel", { id, label });
    }
    async anomalies(kind) {
        const body = await this.request(`/anomalies?kind=${encodeURIComponent(kind)}`);
        return body.flags;
    }
}
